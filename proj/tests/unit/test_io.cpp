#include "doctest.h"
#include "oracles.hpp"

#include "isa/io.hpp"

#include <filesystem>
#include <random>

using namespace isa;

TEST_CASE("matrix CSV round trip is exact") {
    std::mt19937_64 rng(5);
    MatrixXd m = oracle::random_symmetric(5, rng);
    m(0, 0) = 1e-300;
    m(1, 2) = -0.1;
    const MatrixXd back = io::parse_matrix_csv(io::format_matrix_csv(m));
    CHECK(back == m);

    const auto path = std::filesystem::temp_directory_path() / "isa_io_roundtrip.csv";
    io::write_matrix_csv(path, m);
    CHECK(io::read_matrix_csv(path) == m);
    std::filesystem::remove(path);
}

TEST_CASE("matrix CSV parsing") {
    CHECK(io::parse_matrix_csv("1,2\n3,4\n") == (MatrixXd(2, 2) << 1, 2, 3, 4).finished());
    CHECK(io::parse_matrix_csv("1, 2\r\n3,4").rows() == 2);
    CHECK_THROWS_AS(io::parse_matrix_csv("1,2\n3\n"), std::invalid_argument);
    CHECK_THROWS_AS(io::parse_matrix_csv("1,x\n"), std::invalid_argument);
    CHECK_THROWS_AS(io::parse_matrix_csv(""), std::invalid_argument);
    CHECK(io::format_matrix_csv(MatrixXd::Identity(2, 2)) == "1,0\n0,1\n");
}

TEST_CASE("partition JSON is 1-based") {
    const GroupPartition p({{0, 2}, {1, 3}});
    const std::string text = io::format_partition_json(p);
    CHECK(text.find("[1,3]") != std::string::npos);
    CHECK(io::parse_partition_json(text) == p);
    CHECK_THROWS_AS(io::parse_partition_json(R"({"groups": [[0, 1], [2]]})"), std::invalid_argument);
    CHECK_THROWS_AS(io::parse_partition_json(R"({"g": []})"), std::invalid_argument);
    CHECK_THROWS_AS(io::parse_partition_json("not json"), std::invalid_argument);
}

TEST_CASE("format_double") {
    CHECK(io::format_double(0.1) == "0.10000000000000001");
    CHECK(io::format_double(0.94301, 4) == "0.943");
}
