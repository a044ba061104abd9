#pragma once

#include <optional>

#include "error.hpp"

namespace pvdefect {

enum class KernelType : std::uint8_t { Linear = 0, Rbf = 1 };
enum class Growth : std::uint8_t { Levelwise = 0, Leafwise = 1 };

struct SvmParams {
    double C = 1.0;
    KernelType kernel = KernelType::Rbf;
    std::optional<double> gamma;  // unset: 1 / (dim * variance of the training matrix)
    double tol = 1e-3;
    long max_iter = 10'000'000;
    friend bool operator==(const SvmParams&, const SvmParams&) = default;
};

struct GbdtParams {
    int rounds = 200;
    double eta = 0.1;
    Growth growth = Growth::Levelwise;
    int max_depth = 6;    // levelwise
    int max_leaves = 31;  // leafwise
    int min_samples_leaf = 5;
    int bins = 64;
    double lambda = 1.0;
    friend bool operator==(const GbdtParams&, const GbdtParams&) = default;
};

struct TrainParams {
    SvmParams svm;
    GbdtParams gbdt;

    void validate() const {
        require(svm.C > 0, Errc::InvalidConfig, "SVM C must be > 0");
        require(!svm.gamma || *svm.gamma > 0, Errc::InvalidConfig, "SVM gamma must be > 0");
        require(svm.tol > 0 && svm.max_iter > 0, Errc::InvalidConfig, "SVM tol/max_iter must be positive");
        require(gbdt.rounds >= 0, Errc::InvalidConfig, "GBDT rounds must be >= 0");
        require(gbdt.eta >= 0 && gbdt.eta <= 1, Errc::InvalidConfig, "GBDT eta must lie in [0, 1]");
        require(gbdt.max_depth >= 1 && gbdt.max_leaves >= 2, Errc::InvalidConfig, "GBDT tree limits too small");
        require(gbdt.min_samples_leaf >= 1, Errc::InvalidConfig, "min_samples_leaf must be >= 1");
        require(gbdt.bins >= 2 && gbdt.bins <= 256, Errc::InvalidConfig, "GBDT bins must lie in 2..256");
        require(gbdt.lambda >= 0, Errc::InvalidConfig, "GBDT lambda must be >= 0");
    }
    friend bool operator==(const TrainParams&, const TrainParams&) = default;
};

}  // namespace pvdefect
