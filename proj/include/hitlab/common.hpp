#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace hitlab {

// Error hierarchy; exit_code matches the CLI contract
// (2 schema, 3 non-primitive, 4 non-convergence, 5 residual/quality failure).
class HitlabError : public std::runtime_error {
public:
    HitlabError(std::string msg, int code)
        : std::runtime_error(std::move(msg)), exit_code(code) {}
    int exit_code;
};

class SchemaError : public HitlabError {
public:
    explicit SchemaError(const std::string& msg) : HitlabError(msg, 2) {}
};

class NonPrimitiveError : public HitlabError {
public:
    explicit NonPrimitiveError(const std::string& msg) : HitlabError(msg, 3) {}
};

class ConvergenceError : public HitlabError {
public:
    explicit ConvergenceError(const std::string& msg) : HitlabError(msg, 4) {}
};

class ResidualError : public HitlabError {
public:
    explicit ResidualError(const std::string& msg) : HitlabError(msg, 5) {}
};

// Dense row-major matrix, sized for desk-scale chains.
struct Dense {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> a;

    Dense() = default;
    Dense(std::size_t r, std::size_t c, double fill = 0.0)
        : rows(r), cols(c), a(r * c, fill) {}

    double& operator()(std::size_t i, std::size_t j) { return a[i * cols + j]; }
    double operator()(std::size_t i, std::size_t j) const { return a[i * cols + j]; }

    const double* row(std::size_t i) const { return a.data() + i * cols; }
};

// v * M for a row vector v.
std::vector<double> row_times(const std::vector<double>& v, const Dense& m);

// M * v for a column vector v.
std::vector<double> times_col(const Dense& m, const std::vector<double>& v);

double dot(const std::vector<double>& x, const std::vector<double>& y);
double l1_diff(const std::vector<double>& x, const std::vector<double>& y);
double sum(const std::vector<double>& x);

// Solves M * X = B in place of a copy (partial-pivot LU); B is rows x k.
// Throws ConvergenceError on a numerically singular system.
Dense solve_linear(const Dense& m, const Dense& b);

// Worker count: HITLAB_THREADS if set, else hardware concurrency.
unsigned worker_count();

// Runs fn(begin, end) over [0, n) split into contiguous blocks, one per worker.
// Results must be written to disjoint preallocated slots so the partitioning
// cannot affect the output.
void parallel_for(std::size_t n, const std::function<void(std::size_t, std::size_t)>& fn);

}  // namespace hitlab
