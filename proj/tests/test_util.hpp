#pragma once

#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "saesg/series.hpp"

namespace testutil {

inline std::filesystem::path temp_dir(const std::string& name) {
    auto dir = std::filesystem::temp_directory_path() / ("saesg_test_" + name);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

inline std::filesystem::path write_file(const std::filesystem::path& path, const std::string& text) {
    std::ofstream(path) << text;
    return path;
}

inline std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// x(t) = mu + a (x(t-1) - mu) + sigma z, started at mu.
inline Eigen::VectorXd ar1_path(std::size_t n, double mu, double a, double sigma, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> z;
    Eigen::VectorXd x(static_cast<Eigen::Index>(n));
    double prev = mu;
    for (Eigen::Index t = 0; t < x.size(); ++t) {
        prev = mu + a * (prev - mu) + sigma * z(rng);
        x(t) = prev;
    }
    return x;
}

inline std::string csv(const saesg::AnnualSeries& s, const char* header = "year,value") {
    std::string out = std::string(header) + "\n";
    char buf[64];
    for (Eigen::Index i = 0; i < s.size(); ++i) {
        std::snprintf(buf, sizeof buf, "%d,%.17g\n", s.start_year() + static_cast<int>(i), s[i]);
        out += buf;
    }
    return out;
}

}  // namespace testutil
