#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "image.hpp"
#include "matrix.hpp"
#include "params.hpp"

namespace pvdefect {

namespace detail {

inline double dot(const double* a, const double* b, std::size_t n) {
    double s0 = 0, s1 = 0, s2 = 0, s3 = 0;
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        s0 += a[i] * b[i];
        s1 += a[i + 1] * b[i + 1];
        s2 += a[i + 2] * b[i + 2];
        s3 += a[i + 3] * b[i + 3];
    }
    for (; i < n; ++i) s0 += a[i] * b[i];
    return (s0 + s1) + (s2 + s3);
}

inline double sq_dist(const double* a, const double* b, std::size_t n) {
    double s0 = 0, s1 = 0, s2 = 0, s3 = 0;
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const double d0 = a[i] - b[i], d1 = a[i + 1] - b[i + 1], d2 = a[i + 2] - b[i + 2], d3 = a[i + 3] - b[i + 3];
        s0 += d0 * d0;
        s1 += d1 * d1;
        s2 += d2 * d2;
        s3 += d3 * d3;
    }
    for (; i < n; ++i) s0 += (a[i] - b[i]) * (a[i] - b[i]);
    return (s0 + s1) + (s2 + s3);
}

inline void check_training_data(const Matrix& X, std::span<const ClassLabel> y) {
    require(X.rows() == y.size(), Errc::LengthMismatch, "feature rows and labels differ in count");
    require(!X.empty(), Errc::EmptyMatrix, "no training samples");
    for (double v : X.data()) require(std::isfinite(v), Errc::NonFiniteFeature, "training matrix has non-finite values");
    std::array<bool, kNumClasses> present{};
    for (auto l : y) present[label_code(l)] = true;
    require(std::count(present.begin(), present.end(), true) >= 2, Errc::SingleClass,
            "training data must contain at least two classes");
}

inline std::vector<int> present_classes(std::span<const ClassLabel> y) {
    std::array<bool, kNumClasses> present{};
    for (auto l : y) present[label_code(l)] = true;
    std::vector<int> out;
    for (int c = 0; c < kNumClasses; ++c)
        if (present[c]) out.push_back(c);
    return out;
}

}  // namespace detail

struct Kernel {
    KernelType type = KernelType::Rbf;
    double gamma = 1.0;

    double operator()(const double* a, const double* b, std::size_t n) const {
        return type == KernelType::Linear ? detail::dot(a, b, n) : std::exp(-gamma * detail::sq_dist(a, b, n));
    }
    friend bool operator==(const Kernel&, const Kernel&) = default;
};

/// Result of one two-class dual problem; labels are +1 for `pos`, -1 for `neg`.
struct BinarySvm {
    int pos = 0;
    int neg = 0;
    std::vector<std::uint32_t> sv;   // indices into the model's support-vector pool
    std::vector<double> coef;        // alpha_i * y_i
    double bias = 0.0;               // f(x) = sum coef_i K(sv_i, x) + bias
    double kkt_residual = 0.0;       // max violating-pair gap at exit
    long iterations = 0;
    friend bool operator==(const BinarySvm&, const BinarySvm&) = default;
};

struct SvmModel {
    std::vector<int> classes;  // class codes present at training time, ascending
    Kernel kernel;
    double C = 1.0;
    Matrix support_vectors;    // pooled across all pairwise problems
    std::vector<BinarySvm> pairs;
    friend bool operator==(const SvmModel&, const SvmModel&) = default;
};

struct SvmPrediction {
    ClassLabel label = ClassLabel::Clean;
    std::array<int, kNumClasses> votes{};
    std::vector<double> decisions;  // one per pair, model.pairs order
    double score = 0.0;             // winner's votes / (classes - 1)
};

namespace detail {

struct DualSolution {
    std::vector<double> alpha;
    double rho = 0.0;
    double gap = 0.0;
    long iterations = 0;
};

/**
 * C-SVC dual by SMO with second-order working-set selection:
 *   min 1/2 a'Qa - e'a   s.t. 0 <= a <= C, y'a = 0,   Q_ij = y_i y_j K_ij.
 * Stops when the maximal violating pair gap drops below `tol`.
 */
inline DualSolution solve_dual(const std::vector<double>& K, const std::vector<signed char>& y, double C, double tol,
                               long max_iter) {
    const std::size_t n = y.size();
    constexpr double tau = 1e-12;
    std::vector<double> alpha(n, 0.0), G(n, -1.0);
    auto Q = [&](std::size_t i, std::size_t j) { return y[i] * y[j] * K[i * n + j]; };
    auto is_up = [&](std::size_t t) { return (y[t] > 0 && alpha[t] < C) || (y[t] < 0 && alpha[t] > 0); };
    auto is_low = [&](std::size_t t) { return (y[t] > 0 && alpha[t] > 0) || (y[t] < 0 && alpha[t] < C); };

    DualSolution sol;
    long iter = 0;
    double gap = 0.0;
    for (; iter < max_iter; ++iter) {
        double gmax = -std::numeric_limits<double>::infinity();
        std::ptrdiff_t i = -1;
        for (std::size_t t = 0; t < n; ++t)
            if (is_up(t) && -y[t] * G[t] > gmax) {
                gmax = -y[t] * G[t];
                i = static_cast<std::ptrdiff_t>(t);
            }
        double gmax2 = -std::numeric_limits<double>::infinity();
        std::ptrdiff_t j = -1;
        double obj_min = std::numeric_limits<double>::infinity();
        for (std::size_t t = 0; t < n; ++t) {
            if (!is_low(t)) continue;
            gmax2 = std::max(gmax2, y[t] * G[t]);
            if (i < 0) continue;
            const double b = gmax + y[t] * G[t];
            if (b > 0) {
                double a = K[i * n + i] + K[t * n + t] - 2.0 * K[i * n + t];
                if (a <= 0) a = tau;
                const double obj = -(b * b) / a;
                if (obj < obj_min) {
                    obj_min = obj;
                    j = static_cast<std::ptrdiff_t>(t);
                }
            }
        }
        gap = gmax + gmax2;
        if (i < 0 || j < 0 || gap < tol) break;

        const std::size_t ii = static_cast<std::size_t>(i), jj = static_cast<std::size_t>(j);
        const double old_i = alpha[ii], old_j = alpha[jj];
        if (y[ii] != y[jj]) {
            double quad = K[ii * n + ii] + K[jj * n + jj] + 2.0 * Q(ii, jj);
            if (quad <= 0) quad = tau;
            const double delta = (-G[ii] - G[jj]) / quad;
            const double diff = alpha[ii] - alpha[jj];
            alpha[ii] += delta;
            alpha[jj] += delta;
            if (diff > 0) {
                if (alpha[jj] < 0) { alpha[jj] = 0; alpha[ii] = diff; }
            } else {
                if (alpha[ii] < 0) { alpha[ii] = 0; alpha[jj] = -diff; }
            }
            if (diff > 0) {
                if (alpha[ii] > C) { alpha[ii] = C; alpha[jj] = C - diff; }
            } else {
                if (alpha[jj] > C) { alpha[jj] = C; alpha[ii] = C + diff; }
            }
        } else {
            double quad = K[ii * n + ii] + K[jj * n + jj] - 2.0 * Q(ii, jj);
            if (quad <= 0) quad = tau;
            const double delta = (G[ii] - G[jj]) / quad;
            const double sum = alpha[ii] + alpha[jj];
            alpha[ii] -= delta;
            alpha[jj] += delta;
            if (sum > C) {
                if (alpha[ii] > C) { alpha[ii] = C; alpha[jj] = sum - C; }
            } else {
                if (alpha[jj] < 0) { alpha[jj] = 0; alpha[ii] = sum; }
            }
            if (sum > C) {
                if (alpha[jj] > C) { alpha[jj] = C; alpha[ii] = sum - C; }
            } else {
                if (alpha[ii] < 0) { alpha[ii] = 0; alpha[jj] = sum; }
            }
        }
        const double di = alpha[ii] - old_i, dj = alpha[jj] - old_j;
        for (std::size_t t = 0; t < n; ++t) G[t] += Q(t, ii) * di + Q(t, jj) * dj;
    }

    // Bias: average over free multipliers, else the midpoint of the feasible interval.
    double ub = std::numeric_limits<double>::infinity(), lb = -std::numeric_limits<double>::infinity();
    double sum_free = 0.0;
    int n_free = 0;
    for (std::size_t t = 0; t < n; ++t) {
        const double yg = y[t] * G[t];
        if (alpha[t] >= C) {
            if (y[t] < 0) ub = std::min(ub, yg);
            else lb = std::max(lb, yg);
        } else if (alpha[t] <= 0) {
            if (y[t] > 0) ub = std::min(ub, yg);
            else lb = std::max(lb, yg);
        } else {
            ++n_free;
            sum_free += yg;
        }
    }
    sol.rho = n_free > 0 ? sum_free / n_free : (ub + lb) / 2.0;
    sol.alpha = std::move(alpha);
    sol.gap = std::max(gap, 0.0);
    sol.iterations = iter;
    return sol;
}

}  // namespace detail

/// 1 / (dim * variance of all matrix entries); 1 / dim when the matrix is constant.
inline double default_rbf_gamma(const Matrix& X) {
    const auto d = X.data();
    double mean = 0.0;
    for (double v : d) mean += v;
    mean /= static_cast<double>(d.size());
    double var = 0.0;
    for (double v : d) var += (v - mean) * (v - mean);
    var /= static_cast<double>(d.size());
    const double dim = static_cast<double>(X.cols());
    return var > 0 ? 1.0 / (dim * var) : 1.0 / dim;
}

/// One-vs-one kernel SVM: one dual problem per pair of classes present in `y`.
inline SvmModel svm_train(const Matrix& X, std::span<const ClassLabel> y, const SvmParams& p = {}) {
    detail::check_training_data(X, y);
    require(p.C > 0 && p.tol > 0, Errc::InvalidConfig, "SVM C and tol must be positive");
    SvmModel m;
    m.classes = detail::present_classes(y);
    m.C = p.C;
    m.kernel.type = p.kernel;
    m.kernel.gamma = p.kernel == KernelType::Rbf ? p.gamma.value_or(default_rbf_gamma(X)) : 0.0;
    require(p.kernel == KernelType::Linear || m.kernel.gamma > 0, Errc::InvalidConfig, "gamma must be > 0");

    const std::size_t n = X.rows(), d = X.cols();
    std::vector<double> gram(n * n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i; j < n; ++j)
            gram[i * n + j] = gram[j * n + i] = m.kernel(X.row(i).data(), X.row(j).data(), d);

    std::vector<std::int64_t> pool_index(n, -1);
    for (std::size_t a = 0; a < m.classes.size(); ++a) {
        for (std::size_t b = a + 1; b < m.classes.size(); ++b) {
            std::vector<std::size_t> idx;
            std::vector<signed char> yy;
            for (std::size_t i = 0; i < n; ++i) {
                const int c = label_code(y[i]);
                if (c == m.classes[a] || c == m.classes[b]) {
                    idx.push_back(i);
                    yy.push_back(c == m.classes[a] ? 1 : -1);
                }
            }
            const std::size_t k = idx.size();
            std::vector<double> K(k * k);
            for (std::size_t r = 0; r < k; ++r)
                for (std::size_t c = 0; c < k; ++c) K[r * k + c] = gram[idx[r] * n + idx[c]];
            const auto sol = detail::solve_dual(K, yy, p.C, p.tol, p.max_iter);

            BinarySvm bin;
            bin.pos = m.classes[a];
            bin.neg = m.classes[b];
            bin.bias = -sol.rho;
            bin.kkt_residual = sol.gap;
            bin.iterations = sol.iterations;
            for (std::size_t r = 0; r < k; ++r) {
                if (sol.alpha[r] <= 0) continue;
                const std::size_t src = idx[r];
                if (pool_index[src] < 0) {
                    pool_index[src] = static_cast<std::int64_t>(m.support_vectors.rows());
                    m.support_vectors.append_row(X.row(src));
                }
                bin.sv.push_back(static_cast<std::uint32_t>(pool_index[src]));
                bin.coef.push_back(sol.alpha[r] * yy[r]);
            }
            m.pairs.push_back(std::move(bin));
        }
    }
    if (m.support_vectors.rows() == 0) m.support_vectors = Matrix(0, d);
    return m;
}

/**
 * Pairwise decisions and majority vote. Ties go to the class with the larger
 * summed |decision| over the duels it won, then to the lower class code.
 */
inline SvmPrediction svm_predict(const SvmModel& m, std::span<const double> x) {
    require(x.size() == m.support_vectors.cols(), Errc::SignatureMismatch,
            "feature length " + std::to_string(x.size()) + " != model dim " + std::to_string(m.support_vectors.cols()));
    std::vector<double> kv(m.support_vectors.rows());
    for (std::size_t i = 0; i < kv.size(); ++i)
        kv[i] = m.kernel(m.support_vectors.row(i).data(), x.data(), x.size());
    SvmPrediction out;
    std::array<double, kNumClasses> strength{};
    for (const auto& p : m.pairs) {
        double f = p.bias;
        for (std::size_t t = 0; t < p.sv.size(); ++t) f += p.coef[t] * kv[p.sv[t]];
        out.decisions.push_back(f);
        const int winner = f > 0 ? p.pos : p.neg;
        ++out.votes[winner];
        strength[winner] += std::abs(f);
    }
    int best = m.classes.front();
    for (int c : m.classes) {
        if (out.votes[c] > out.votes[best] || (out.votes[c] == out.votes[best] && strength[c] > strength[best]))
            best = c;
    }
    out.label = label_from_code(best);
    out.score = m.classes.size() > 1 ? static_cast<double>(out.votes[best]) / static_cast<double>(m.classes.size() - 1) : 1.0;
    return out;
}

}  // namespace pvdefect
