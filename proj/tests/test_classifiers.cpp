#include <gtest/gtest.h>

#include <cmath>
#include <cstring>
#include <numeric>
#include <map>
#include <random>

#include "pvdefect/model.hpp"
#include "test_util.hpp"

using namespace pvdefect;

namespace {

struct Data {
    Matrix X;
    std::vector<ClassLabel> y;
};

/// Gaussian blobs around well-separated centres, one per requested class.
Data blobs(int per_class, int classes, std::size_t dim, double spread, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g(0.0, spread);
    Data d;
    d.X = Matrix(0, dim);
    std::vector<double> row(dim);
    for (int c = 0; c < classes; ++c)
        for (int i = 0; i < per_class; ++i) {
            for (std::size_t k = 0; k < dim; ++k) row[k] = (k == static_cast<std::size_t>(c) % dim ? 4.0 : 0.0) + (c >= static_cast<int>(dim) ? -4.0 : 0.0) + g(rng);
            d.X.append_row(row);
            d.y.push_back(label_from_code(c));
        }
    return d;
}

double rbf(std::span<const double> a, std::span<const double> b, double gamma) {
    double s = 0;
    for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
    return std::exp(-gamma * s);
}

/// Direct evaluation of sum_i alpha_i y_i K(x_i, x) + b for every pair.
std::vector<double> oracle_decisions(const SvmModel& m, std::span<const double> x) {
    std::vector<double> out;
    for (const auto& p : m.pairs) {
        double f = p.bias;
        for (std::size_t t = 0; t < p.sv.size(); ++t) {
            const auto sv = m.support_vectors.row(p.sv[t]);
            const double k = m.kernel.type == KernelType::Linear
                                 ? std::inner_product(sv.begin(), sv.end(), x.begin(), 0.0)
                                 : rbf(sv, x, m.kernel.gamma);
            f += p.coef[t] * k;
        }
        out.push_back(f);
    }
    return out;
}

double accuracy(const std::vector<ClassLabel>& truth, const std::vector<ClassLabel>& pred) {
    int ok = 0;
    for (std::size_t i = 0; i < truth.size(); ++i) ok += truth[i] == pred[i];
    return static_cast<double>(ok) / static_cast<double>(truth.size());
}

std::vector<ClassLabel> svm_labels(const SvmModel& m, const Matrix& X) {
    std::vector<ClassLabel> out;
    for (std::size_t i = 0; i < X.rows(); ++i) out.push_back(svm_predict(m, X.row(i)).label);
    return out;
}

std::vector<ClassLabel> gbdt_labels(const GbdtModel& m, const Matrix& X) {
    std::vector<ClassLabel> out;
    for (std::size_t i = 0; i < X.rows(); ++i) out.push_back(gbdt_predict(m, X.row(i), X.cols()).label);
    return out;
}

}  // namespace

TEST(Svm, SeparableBlobsPerfect) {
    const auto d = blobs(30, 2, 2, 0.5, 1);
    SvmParams p;
    p.kernel = KernelType::Linear;
    const auto m = svm_train(d.X, d.y, p);
    EXPECT_EQ(accuracy(d.y, svm_labels(m, d.X)), 1.0);
    ASSERT_EQ(m.pairs.size(), 1u);
    EXPECT_LT(m.pairs[0].kkt_residual, 1e-3);
}

TEST(Svm, XorWithRbf) {
    Data d;
    d.X = Matrix(0, 2);
    const double pts[4][2] = {{0, 0}, {1, 1}, {0, 1}, {1, 0}};
    for (int i = 0; i < 4; ++i) {
        d.X.append_row(std::vector<double>{pts[i][0], pts[i][1]});
        d.y.push_back(i < 2 ? ClassLabel::Clean : ClassLabel::Dusty);
    }
    SvmParams p;
    p.gamma = 1.0;
    p.C = 10.0;
    const auto m = svm_train(d.X, d.y, p);
    EXPECT_EQ(accuracy(d.y, svm_labels(m, d.X)), 1.0);
}

TEST(Svm, DualSolutionSatisfiesBoxAndEquality) {
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        const auto d = blobs(25, 2, 3, 1.5, seed);
        const std::size_t n = d.X.rows();
        std::vector<double> K(n * n);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) K[i * n + j] = rbf(d.X.row(i), d.X.row(j), 0.3);
        std::vector<signed char> y(n);
        for (std::size_t i = 0; i < n; ++i) y[i] = d.y[i] == ClassLabel::Clean ? 1 : -1;
        const double C = 0.7;
        const auto sol = detail::solve_dual(K, y, C, 1e-3, 1'000'000);
        double s = 0;
        for (std::size_t i = 0; i < n; ++i) {
            EXPECT_GE(sol.alpha[i], 0.0);
            EXPECT_LE(sol.alpha[i], C);
            s += sol.alpha[i] * y[i];
        }
        EXPECT_LE(std::abs(s), 1e-6);
        EXPECT_LT(sol.gap, 1e-3);

        // KKT conditions for the returned bias, with the solver tolerance as slack
        for (std::size_t i = 0; i < n; ++i) {
            double f = -sol.rho;
            for (std::size_t j = 0; j < n; ++j) f += sol.alpha[j] * y[j] * K[j * n + i];
            const double margin = y[i] * f;
            if (sol.alpha[i] <= 0) EXPECT_GE(margin, 1 - 1e-3);
            else if (sol.alpha[i] >= C) EXPECT_LE(margin, 1 + 1e-3);
            else EXPECT_NEAR(margin, 1.0, 1e-3);
        }
    }
}

TEST(Svm, MulticlassModelInvariants) {
    const auto d = blobs(20, 6, 6, 1.0, 7);
    SvmParams p;
    p.C = 2.0;
    const auto m = svm_train(d.X, d.y, p);
    ASSERT_EQ(m.pairs.size(), 15u);
    for (const auto& pr : m.pairs) {
        double s = 0;
        for (double c : pr.coef) {
            EXPECT_GT(std::abs(c), 0.0);
            EXPECT_LE(std::abs(c), p.C + 1e-12);
            s += c;
        }
        EXPECT_LE(std::abs(s), 1e-6);
        EXPECT_LT(pr.kkt_residual, 1e-3);
    }
    // every support vector is a training row
    for (std::size_t i = 0; i < m.support_vectors.rows(); ++i) {
        bool found = false;
        for (std::size_t r = 0; r < d.X.rows() && !found; ++r)
            found = std::equal(d.X.row(r).begin(), d.X.row(r).end(), m.support_vectors.row(i).begin());
        EXPECT_TRUE(found);
    }
    EXPECT_GE(accuracy(d.y, svm_labels(m, d.X)), 0.95);
}

TEST(Svm, DecisionsMatchKernelSumOracleAndVotesSumTo15) {
    const auto d = blobs(15, 6, 4, 1.2, 3);
    const auto m = svm_train(d.X, d.y);
    std::mt19937_64 rng(5);
    std::normal_distribution<double> g(0.0, 3.0);
    for (int t = 0; t < 50; ++t) {
        std::vector<double> x(4);
        for (auto& v : x) v = g(rng);
        const auto p = svm_predict(m, x);
        const auto ref = oracle_decisions(m, x);
        ASSERT_EQ(p.decisions.size(), ref.size());
        for (std::size_t i = 0; i < ref.size(); ++i) EXPECT_NEAR(p.decisions[i], ref[i], 1e-9);
        int votes = 0;
        for (int v : p.votes) votes += v;
        EXPECT_EQ(votes, 15);
        EXPECT_GE(p.votes[label_code(p.label)], *std::max_element(p.votes.begin(), p.votes.end()));
    }
}

TEST(Svm, SupportVectorOfSeparableSetGetsOwnLabel) {
    const auto d = blobs(20, 3, 3, 0.3, 9);
    const auto m = svm_train(d.X, d.y);
    for (std::size_t i = 0; i < m.support_vectors.rows(); ++i) {
        for (std::size_t r = 0; r < d.X.rows(); ++r)
            if (std::equal(d.X.row(r).begin(), d.X.row(r).end(), m.support_vectors.row(i).begin()))
                EXPECT_EQ(svm_predict(m, m.support_vectors.row(i)).label, d.y[r]);
    }
}

TEST(Svm, DuplicatePointsMergeWithSummedCoefficients) {
    auto d = blobs(10, 2, 2, 1.5, 4);
    for (std::size_t r = 0; r < 6; ++r) {
        const std::vector<double> row(d.X.row(r).begin(), d.X.row(r).end());
        d.X.append_row(row);
        d.y.push_back(d.y[r]);
    }
    SvmParams p;
    p.gamma = 0.5;
    const auto m = svm_train(d.X, d.y, p);

    // merge identical support vectors, summing alpha_i y_i
    std::map<std::vector<double>, double> merged;
    for (std::size_t t = 0; t < m.pairs[0].sv.size(); ++t) {
        const auto row = m.support_vectors.row(m.pairs[0].sv[t]);
        merged[std::vector<double>(row.begin(), row.end())] += m.pairs[0].coef[t];
    }
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> u(-5, 5);
    for (int t = 0; t < 30; ++t) {
        std::vector<double> x{u(rng), u(rng)};
        double f = m.pairs[0].bias;
        for (const auto& [sv, c] : merged) f += c * rbf(sv, x, 0.5);
        EXPECT_NEAR(svm_predict(m, x).decisions[0], f, 1e-9);
    }
}

TEST(Svm, LabelsInvariantUnderRescalingWithStandardizer) {
    const auto d = blobs(15, 6, 6, 1.5, 12);
    const Signature sig{{{BlockKind::Lbp, 6}}};
    for (double scale : {0.01, 3.0, 250.0}) {
        Matrix S = d.X;
        for (auto& v : S.data()) v *= scale;
        const auto a = train_model(Classifier::Svm, d.X, d.y, sig, {}, true);
        const auto b = train_model(Classifier::Svm, S, d.y, sig, {}, true);
        for (std::size_t i = 0; i < d.X.rows(); ++i) EXPECT_EQ(predict(a, d.X.row(i)).label, predict(b, S.row(i)).label);
    }
}

TEST(Svm, Errors) {
    Matrix X(3, 2, 1.0);
    std::vector<ClassLabel> one(3, ClassLabel::Dusty);
    EXPECT_ERRC(svm_train(X, one), Errc::SingleClass);
    std::vector<ClassLabel> two{ClassLabel::Clean, ClassLabel::Dusty, ClassLabel::Dusty};
    X(1, 1) = std::numeric_limits<double>::quiet_NaN();
    EXPECT_ERRC(svm_train(X, two), Errc::NonFiniteFeature);
    const auto m = svm_train(Matrix(3, 2, 1.0), two);
    EXPECT_ERRC(svm_predict(m, std::vector<double>(3)), Errc::SignatureMismatch);
}

TEST(Gbdt, LogLossNonIncreasing) {
    const auto d = blobs(20, 6, 5, 2.5, 21);
    for (Growth gr : {Growth::Levelwise, Growth::Leafwise}) {
        GbdtParams p;
        p.growth = gr;
        const auto m = gbdt_train(d.X, d.y, p);
        ASSERT_EQ(m.train_logloss.size(), 200u);
        EXPECT_LT(m.train_logloss.front(), std::log(6.0));
        for (std::size_t r = 1; r < m.train_logloss.size(); ++r)
            EXPECT_LE(m.train_logloss[r], m.train_logloss[r - 1] + 1e-9) << "round " << r;
    }
}

TEST(Gbdt, SignFixture) {
    Data d;
    d.X = Matrix(0, 1);
    for (int i = -20; i <= 20; ++i) {
        if (i == 0) continue;
        d.X.append_row(std::vector<double>{i / 20.0});
        d.y.push_back(i > 0 ? ClassLabel::Dusty : ClassLabel::Clean);
    }
    GbdtParams p;
    p.max_depth = 1;
    p.rounds = 5;
    const auto m5 = gbdt_train(d.X, d.y, p);
    EXPECT_EQ(accuracy(d.y, gbdt_labels(m5, d.X)), 1.0);
    for (const auto& t : m5.trees) {
        ASSERT_EQ(t.nodes.size(), 3u);
        EXPECT_EQ(t.nodes[0].feature, 0);
        EXPECT_LT(t.nodes[0].threshold, 0.0);
        EXPECT_GE(t.nodes[0].threshold, -0.05);
    }

    p.rounds = 50;
    const auto m = gbdt_train(d.X, d.y, p);
    for (std::size_t i = 0; i < d.X.rows(); ++i) {
        const auto pr = gbdt_predict(m, d.X.row(i), 1);
        EXPECT_GT(pr.probabilities[label_code(d.y[i])], 0.9);
    }
}

TEST(Gbdt, LeafWeightsMatchHandComputation) {
    Matrix X(3, 1);
    X(0, 0) = 0;
    X(1, 0) = 1;
    X(2, 0) = 2;
    const std::vector<ClassLabel> y{ClassLabel::Clean, ClassLabel::Dusty, ClassLabel::Dusty};
    GbdtParams p;
    p.rounds = 1;
    p.max_depth = 1;
    p.min_samples_leaf = 1;
    p.eta = 0.1;
    p.lambda = 1.0;
    const auto m = gbdt_train(X, y, p);
    ASSERT_EQ(m.trees.size(), 2u);
    // Clean tree at p = 1/2: g = (-1/2, 1/2, 1/2), h = 1/4 each.
    // Split x <= 0: left G=-1/2,H=1/4; right G=1,H=1/2.
    const auto& t = m.trees[0];
    ASSERT_EQ(t.nodes.size(), 3u);
    EXPECT_EQ(t.nodes[0].threshold, 0.0);
    const double left = 0.1 * (0.5 / 1.25), right = 0.1 * (-1.0 / 1.5);
    EXPECT_NEAR(t.nodes[t.nodes[0].left].value, left, 1e-15);
    EXPECT_NEAR(t.nodes[t.nodes[0].right].value, right, 1e-15);
    EXPECT_GT(left, 0.0);
    // the Dusty tree mirrors it
    const auto& u = m.trees[1];
    EXPECT_NEAR(u.nodes[u.nodes[0].left].value, -left, 1e-15);
    EXPECT_NEAR(u.nodes[u.nodes[0].right].value, -right, 1e-15);
}

TEST(Gbdt, UniformWithoutLearning) {
    const auto d = blobs(8, 6, 3, 1.0, 2);
    GbdtParams p;
    p.rounds = 0;
    const auto m0 = gbdt_train(d.X, d.y, p);
    EXPECT_TRUE(m0.trees.empty());
    p.rounds = 10;
    p.eta = 0.0;
    const auto me = gbdt_train(d.X, d.y, p);
    EXPECT_EQ(me.trees.size(), 60u);
    for (const auto* m : {&m0, &me}) {
        const auto pr = gbdt_predict(*m, d.X.row(5), 3);
        for (double q : pr.probabilities) EXPECT_NEAR(q, 1.0 / 6.0, 1e-12);
        EXPECT_EQ(pr.label, ClassLabel::Clean);
    }
}

TEST(Gbdt, StructuralInvariants) {
    const auto d = blobs(15, 6, 4, 2.0, 8);
    std::mt19937_64 rng(1);
    std::normal_distribution<double> g(0.0, 4.0);
    for (Growth gr : {Growth::Levelwise, Growth::Leafwise}) {
        GbdtParams p;
        p.rounds = 25;
        p.growth = gr;
        p.max_depth = 3;
        p.max_leaves = 6;
        const auto m = gbdt_train(d.X, d.y, p);
        EXPECT_EQ(m.trees.size(), 25u * 6u);
        for (const auto& t : m.trees) {
            if (gr == Growth::Leafwise) EXPECT_LE(t.leaves(), 6u);
            else EXPECT_LE(t.leaves(), 8u);
            for (const auto& n : t.nodes) {
                if (n.feature < 0) continue;
                double lo = INFINITY, hi = -INFINITY;
                for (std::size_t r = 0; r < d.X.rows(); ++r) {
                    lo = std::min(lo, d.X(r, n.feature));
                    hi = std::max(hi, d.X(r, n.feature));
                }
                EXPECT_GE(n.threshold, lo);
                EXPECT_LE(n.threshold, hi);
            }
        }
        for (int t = 0; t < 30; ++t) {
            std::vector<double> x(4);
            for (auto& v : x) v = g(rng);
            const auto pr = gbdt_predict(m, x, 4);
            double s = 0;
            for (double q : pr.probabilities) {
                EXPECT_GE(q, 0.0);
                s += q;
            }
            EXPECT_NEAR(s, 1.0, 1e-9);
        }
        EXPECT_EQ(gbdt_train(d.X, d.y, p), m);
    }
}

TEST(Gbdt, Errors) {
    Matrix X(4, 1, 0.0);
    EXPECT_ERRC(gbdt_train(X, std::vector<ClassLabel>(4, ClassLabel::Clean)), Errc::SingleClass);
    const std::vector<ClassLabel> y{ClassLabel::Clean, ClassLabel::Clean, ClassLabel::Dusty, ClassLabel::Dusty};
    GbdtParams p;
    p.eta = 1.5;
    EXPECT_ERRC(gbdt_train(X, y, p), Errc::InvalidConfig);
    p = {};
    p.rounds = 3;
    const auto m = gbdt_train(X, y, p);
    EXPECT_EQ(m.degenerate_trees, 6u);
    EXPECT_ERRC(gbdt_predict(m, std::vector<double>(2), 1), Errc::SignatureMismatch);
}

TEST(ModelFile, RoundTripPredictionsBitIdentical) {
    testutil::TempDir dir;
    const auto d = blobs(10, 6, 5, 1.5, 30);
    const Signature sig{{{BlockKind::Deep, 2}, {BlockKind::Gabor, 3}}};
    TrainParams tp;
    tp.gbdt.rounds = 10;
    std::mt19937_64 rng(3);
    std::normal_distribution<double> g(0.0, 3.0);
    for (Classifier c : kAllClassifiers) {
        auto m = train_model(c, d.X, d.y, sig, tp, true);
        m.metadata = R"({"note":"x"})";
        const auto path = dir / (std::string(classifier_name(c)) + ".pvml");
        save_model(m, path);
        const auto back = load_model(path, m.kind);
        EXPECT_EQ(back, m);
        for (int t = 0; t < 100; ++t) {
            std::vector<double> x(5);
            for (auto& v : x) v = g(rng);
            const auto a = predict(m, x), b = predict(back, x);
            EXPECT_EQ(a.label, b.label);
            EXPECT_EQ(std::memcmp(&a.score, &b.score, sizeof(double)), 0);
            EXPECT_EQ(a.scores, b.scores);
        }
    }
}

TEST(ModelFile, Errors) {
    testutil::TempDir dir;
    const auto d = blobs(6, 3, 2, 1.0, 4);
    const Signature sig{{{BlockKind::Hog, 2}}};
    const auto m = train_model(Classifier::Svm, d.X, d.y, sig, {}, false);
    save_model(m, dir / "m.pvml");
    EXPECT_ERRC(load_model(dir / "m.pvml", ModelKind::Gbdt), Errc::KindMismatch);
    EXPECT_ERRC(m.gbdt(), Errc::KindMismatch);

    const auto bytes = encode_model(m);
    for (std::size_t cut : {bytes.size() - 1, bytes.size() / 2, std::size_t{9}}) {
        std::vector<std::uint8_t> t(bytes.begin(), bytes.begin() + static_cast<std::ptrdiff_t>(cut));
        EXPECT_ERRC(decode_model(t), Errc::Corrupt);
    }
    auto bad = bytes;
    bad[0] = 'Q';
    EXPECT_ERRC(decode_model(bad), Errc::BadMagic);
    bad = bytes;
    bad[4] = 7;
    EXPECT_ERRC(decode_model(bad), Errc::VersionUnsupported);
    bad = bytes;
    bad.push_back(1);
    EXPECT_ERRC(decode_model(bad), Errc::Corrupt);

    EXPECT_ERRC(predict(m, std::vector<double>(3)), Errc::SignatureMismatch);
    EXPECT_ERRC(train_model(Classifier::Svm, d.X, d.y, Signature{{{BlockKind::Hog, 3}}}, {}, false),
                Errc::SignatureMismatch);
}

TEST(ModelFile, ClassifierNames) {
    EXPECT_EQ(classifier_name(Classifier::GbdtLeafwise), "GBDT-leafwise");
    EXPECT_EQ(parse_classifier("xgboost"), Classifier::GbdtLevelwise);
    EXPECT_EQ(parse_classifier("lightgbm"), Classifier::GbdtLeafwise);
    EXPECT_EQ(parse_classifier("SVM"), Classifier::Svm);
}
