#include "hitlab/common.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>

namespace hitlab {

std::vector<double> row_times(const std::vector<double>& v, const Dense& m) {
    std::vector<double> out(m.cols, 0.0);
    for (std::size_t i = 0; i < m.rows; ++i) {
        const double vi = v[i];
        if (vi == 0.0) continue;
        const double* r = m.row(i);
        for (std::size_t j = 0; j < m.cols; ++j) out[j] += vi * r[j];
    }
    return out;
}

std::vector<double> times_col(const Dense& m, const std::vector<double>& v) {
    std::vector<double> out(m.rows, 0.0);
    for (std::size_t i = 0; i < m.rows; ++i) {
        const double* r = m.row(i);
        double acc = 0.0;
        for (std::size_t j = 0; j < m.cols; ++j) acc += r[j] * v[j];
        out[i] = acc;
    }
    return out;
}

double dot(const std::vector<double>& x, const std::vector<double>& y) {
    double acc = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) acc += x[i] * y[i];
    return acc;
}

double l1_diff(const std::vector<double>& x, const std::vector<double>& y) {
    double acc = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) acc += std::abs(x[i] - y[i]);
    return acc;
}

double sum(const std::vector<double>& x) {
    double acc = 0.0;
    for (double v : x) acc += v;
    return acc;
}

Dense solve_linear(const Dense& m, const Dense& b) {
    if (m.rows != m.cols || b.rows != m.rows)
        throw std::invalid_argument("solve_linear: dimension mismatch");
    const std::size_t n = m.rows;
    Dense lu = m;
    Dense x = b;
    std::vector<std::size_t> perm(n);
    for (std::size_t i = 0; i < n; ++i) perm[i] = i;

    for (std::size_t col = 0; col < n; ++col) {
        std::size_t piv = col;
        double best = std::abs(lu(col, col));
        for (std::size_t r = col + 1; r < n; ++r) {
            const double v = std::abs(lu(r, col));
            if (v > best) { best = v; piv = r; }
        }
        if (!(best > 0.0))
            throw ConvergenceError("linear system is singular");
        if (piv != col) {
            for (std::size_t j = 0; j < n; ++j) std::swap(lu(piv, j), lu(col, j));
            for (std::size_t j = 0; j < x.cols; ++j) std::swap(x(piv, j), x(col, j));
        }
        const double d = lu(col, col);
        for (std::size_t r = col + 1; r < n; ++r) {
            const double f = lu(r, col) / d;
            if (f == 0.0) continue;
            lu(r, col) = 0.0;
            for (std::size_t j = col + 1; j < n; ++j) lu(r, j) -= f * lu(col, j);
            for (std::size_t j = 0; j < x.cols; ++j) x(r, j) -= f * x(col, j);
        }
    }
    for (std::size_t col = n; col-- > 0;) {
        const double d = lu(col, col);
        for (std::size_t j = 0; j < x.cols; ++j) {
            double acc = x(col, j);
            for (std::size_t k = col + 1; k < n; ++k) acc -= lu(col, k) * x(k, j);
            x(col, j) = acc / d;
        }
    }
    return x;
}

unsigned worker_count() {
    if (const char* env = std::getenv("HITLAB_THREADS")) {
        const long v = std::strtol(env, nullptr, 10);
        if (v >= 1) return static_cast<unsigned>(v);
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw ? hw : 1;
}

void parallel_for(std::size_t n, const std::function<void(std::size_t, std::size_t)>& fn) {
    const unsigned workers = std::min<std::size_t>(worker_count(), n ? n : 1);
    if (workers <= 1 || n < 2) {
        fn(0, n);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(workers);
    const std::size_t chunk = (n + workers - 1) / workers;
    for (unsigned w = 0; w < workers; ++w) {
        const std::size_t lo = std::min<std::size_t>(w * chunk, n);
        const std::size_t hi = std::min<std::size_t>(lo + chunk, n);
        if (lo >= hi) break;
        pool.emplace_back([&fn, lo, hi] { fn(lo, hi); });
    }
    for (auto& t : pool) t.join();
}

}  // namespace hitlab
