#pragma once

#include "isa/core_types.hpp"

#include <optional>
#include <vector>

namespace isa {

namespace lp {

enum class Status { Optimal, Infeasible, Unbounded, IterationLimit };

struct Result {
    Status status = Status::Infeasible;
    VectorXd x;
    double objective = 0.0;
    int pivots = 0;
};

/**
 * Dense two-phase tableau simplex for
 *   minimize c^T x  subject to  A x <= b,  x >= 0.
 * Pricing is Dantzig's rule with lowest-index ties; after a run of
 * degenerate pivots it switches to Bland's rule for the rest of the phase.
 * The final basic solution is recomputed from the original data with an LU
 * solve.
 */
Result solve(const VectorXd& c, const MatrixXd& a, const VectorXd& b);

}  // namespace lp

struct ClimeSolution {
    MatrixXd m;
    double lambda_prime = 0.0;
    double max_row_l1 = 0.0;
    double feasibility_gap = 0.0;
};

/// Per-row list of columns allowed to be nonzero.
using ColumnMask = std::vector<std::vector<Index>>;

/// Row j may use only the columns of its own group.
ColumnMask block_mask(const GroupPartition& p);

/// Raised when one row's program has no feasible point at the given lambda'.
struct ClimeInfeasible : NumericalError {
    ClimeInfeasible(Index row, double lambda_prime, double suggested);
    Index row;
    double suggested_lambda_prime;
};

/**
 * Solves, for each row j independently,
 *   minimize |m_j|_1  subject to  |target m_j - e_j|_inf <= lambda_prime,
 * with m_j restricted to the masked columns when a mask is given. The rows
 * form M; because rows decouple this also minimizes max_j |m_j|_1.
 */
ClimeSolution solve_clime_rows(const SymmetricMatrix& target, double lambda_prime,
                               const std::optional<ColumnMask>& mask = std::nullopt);

/// Smallest t for which |target m - e_j|_inf <= t is feasible for row j.
double clime_min_feasible_lambda(const SymmetricMatrix& target, Index row,
                                 const std::optional<ColumnMask>& mask = std::nullopt);

}  // namespace isa
