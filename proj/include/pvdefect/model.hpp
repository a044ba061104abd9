#pragma once

#include <algorithm>
#include <array>
#include <cctype>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "binary_io.hpp"
#include "file_io.hpp"
#include "fusion.hpp"
#include "gbdt.hpp"
#include "svm.hpp"

namespace pvdefect {

enum class ModelKind : std::uint8_t { Svm = 0, Gbdt = 1 };

inline std::string_view model_kind_name(ModelKind k) { return k == ModelKind::Svm ? "svm" : "gbdt"; }

/// The three classifier columns of the experiment grid.
enum class Classifier { Svm, GbdtLevelwise, GbdtLeafwise };

inline constexpr std::array<Classifier, 3> kAllClassifiers = {Classifier::Svm, Classifier::GbdtLevelwise,
                                                              Classifier::GbdtLeafwise};

inline std::string_view classifier_name(Classifier c) {
    switch (c) {
        case Classifier::Svm: return "SVM";
        case Classifier::GbdtLevelwise: return "GBDT-levelwise";
        case Classifier::GbdtLeafwise: return "GBDT-leafwise";
    }
    return "?";
}

inline Classifier parse_classifier(std::string_view s) {
    std::string k;
    for (char c : s)
        if (std::isalnum(static_cast<unsigned char>(c))) k += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    if (k == "svm") return Classifier::Svm;
    if (k == "gbdtlevelwise" || k == "levelwise" || k == "xgboost") return Classifier::GbdtLevelwise;
    if (k == "gbdtleafwise" || k == "leafwise" || k == "lightgbm") return Classifier::GbdtLeafwise;
    throw Error(Errc::InvalidArgument, "unknown classifier '" + std::string(s) + "'");
}

/// A trained classifier together with everything needed to score raw fused vectors.
struct Model {
    ModelKind kind = ModelKind::Svm;
    Signature signature;
    std::optional<Standardizer> standardizer;
    TrainParams params;
    std::string metadata = "{}";  // free-form JSON, e.g. extraction settings
    std::variant<SvmModel, GbdtModel> body;

    const SvmModel& svm() const {
        require(kind == ModelKind::Svm, Errc::KindMismatch, "model is not an SVM");
        return std::get<SvmModel>(body);
    }
    const GbdtModel& gbdt() const {
        require(kind == ModelKind::Gbdt, Errc::KindMismatch, "model is not a GBDT");
        return std::get<GbdtModel>(body);
    }
    friend bool operator==(const Model&, const Model&) = default;
};

struct Prediction {
    ClassLabel label = ClassLabel::Clean;
    double score = 0.0;                          // SVM vote share or GBDT probability
    std::array<double, kNumClasses> scores{};    // per-class votes (SVM) or probabilities (GBDT)
};

/// Fits the optional standardizer on `X` and trains the requested classifier on the result.
inline Model train_model(Classifier which, const Matrix& X, std::span<const ClassLabel> y, const Signature& sig,
                         TrainParams params, bool standardize) {
    params.validate();
    require(X.cols() == sig.total_dim(), Errc::SignatureMismatch, "training matrix width differs from signature");
    Model m;
    m.signature = sig;
    if (standardize) m.standardizer = Standardizer::fit(X);
    const Matrix Z = m.standardizer ? m.standardizer->apply(X) : X;
    if (which == Classifier::Svm) {
        m.kind = ModelKind::Svm;
        m.body = svm_train(Z, y, params.svm);
    } else {
        params.gbdt.growth = which == Classifier::GbdtLevelwise ? Growth::Levelwise : Growth::Leafwise;
        m.kind = ModelKind::Gbdt;
        m.body = gbdt_train(Z, y, params.gbdt);
    }
    m.params = params;
    return m;
}

inline Prediction predict(const Model& m, std::span<const double> raw) {
    require(raw.size() == m.signature.total_dim(), Errc::SignatureMismatch,
            "vector length " + std::to_string(raw.size()) + " != signature " + m.signature.to_string());
    std::vector<double> x(raw.begin(), raw.end());
    if (m.standardizer) m.standardizer->apply_inplace(x);
    Prediction out;
    if (m.kind == ModelKind::Svm) {
        const auto p = svm_predict(m.svm(), x);
        out.label = p.label;
        out.score = p.score;
        for (int c = 0; c < kNumClasses; ++c) out.scores[c] = p.votes[c];
    } else {
        const auto p = gbdt_predict(m.gbdt(), x, m.signature.total_dim());
        out.label = p.label;
        out.score = p.score;
        out.scores = p.probabilities;
    }
    return out;
}

inline constexpr char kModelMagic[4] = {'P', 'V', 'M', 'L'};
inline constexpr std::uint16_t kModelVersion = 1;

namespace detail {

inline void write_signature(ByteWriter& w, const Signature& sig) {
    w.u16(static_cast<std::uint16_t>(sig.blocks.size()));
    for (const auto& [k, d] : sig.blocks) {
        w.str16(block_name(k));
        w.u32(static_cast<std::uint32_t>(d));
    }
}

inline Signature read_signature(ByteReader& r) {
    Signature sig;
    const auto n = r.u16();
    for (std::uint16_t i = 0; i < n; ++i) {
        const auto name = r.str16();
        const auto dim = r.u32();
        const auto k = parse_block(name);
        require(k.has_value(), Errc::Corrupt, "unknown block '" + name + "'");
        sig.blocks.emplace_back(*k, dim);
    }
    return sig;
}

inline void write_classes(ByteWriter& w, const std::vector<int>& classes) {
    w.u8(static_cast<std::uint8_t>(classes.size()));
    for (int c : classes) w.u8(static_cast<std::uint8_t>(c));
}

inline std::vector<int> read_classes(ByteReader& r) {
    std::vector<int> classes(r.u8());
    for (auto& c : classes) {
        c = r.u8();
        require(c < kNumClasses, Errc::Corrupt, "class code out of range");
    }
    require(classes.size() >= 2 && std::is_sorted(classes.begin(), classes.end()) &&
                std::adjacent_find(classes.begin(), classes.end()) == classes.end(),
            Errc::Corrupt, "bad class table");
    return classes;
}

inline void write_svm(ByteWriter& w, const SvmModel& m) {
    write_classes(w, m.classes);
    w.u8(static_cast<std::uint8_t>(m.kernel.type));
    w.f64(m.kernel.gamma);
    w.f64(m.C);
    w.u64(m.support_vectors.rows());
    w.u32(static_cast<std::uint32_t>(m.support_vectors.cols()));
    for (double v : m.support_vectors.data()) w.f64(v);
    w.u32(static_cast<std::uint32_t>(m.pairs.size()));
    for (const auto& p : m.pairs) {
        w.u8(static_cast<std::uint8_t>(p.pos));
        w.u8(static_cast<std::uint8_t>(p.neg));
        w.f64(p.bias);
        w.f64(p.kkt_residual);
        w.u64(static_cast<std::uint64_t>(p.iterations));
        w.u32(static_cast<std::uint32_t>(p.sv.size()));
        for (std::size_t t = 0; t < p.sv.size(); ++t) {
            w.u32(p.sv[t]);
            w.f64(p.coef[t]);
        }
    }
}

inline SvmModel read_svm(ByteReader& r) {
    SvmModel m;
    m.classes = read_classes(r);
    const auto kt = r.u8();
    require(kt <= 1, Errc::Corrupt, "unknown kernel type");
    m.kernel.type = static_cast<KernelType>(kt);
    m.kernel.gamma = r.f64();
    m.C = r.f64();
    const auto rows = r.u64();
    const auto cols = r.u32();
    r.need(rows * cols * 8);
    m.support_vectors = Matrix(rows, cols);
    for (auto& v : m.support_vectors.data()) v = r.f64();
    const auto npairs = r.u32();
    require(npairs == m.classes.size() * (m.classes.size() - 1) / 2, Errc::Corrupt, "pair count mismatch");
    for (std::uint32_t i = 0; i < npairs; ++i) {
        BinarySvm p;
        p.pos = r.u8();
        p.neg = r.u8();
        p.bias = r.f64();
        p.kkt_residual = r.f64();
        p.iterations = static_cast<long>(r.u64());
        const auto nsv = r.u32();
        r.need(static_cast<std::size_t>(nsv) * 12);
        for (std::uint32_t t = 0; t < nsv; ++t) {
            p.sv.push_back(r.u32());
            require(p.sv.back() < rows, Errc::Corrupt, "support vector index out of range");
            p.coef.push_back(r.f64());
        }
        m.pairs.push_back(std::move(p));
    }
    return m;
}

inline void write_gbdt(ByteWriter& w, const GbdtModel& m) {
    write_classes(w, m.classes);
    w.f64(m.eta);
    w.u8(static_cast<std::uint8_t>(m.growth));
    w.u32(static_cast<std::uint32_t>(m.rounds));
    w.u32(m.degenerate_trees);
    w.u32(static_cast<std::uint32_t>(m.train_logloss.size()));
    for (double v : m.train_logloss) w.f64(v);
    w.u32(static_cast<std::uint32_t>(m.trees.size()));
    for (const auto& t : m.trees) {
        w.u32(static_cast<std::uint32_t>(t.nodes.size()));
        for (const auto& n : t.nodes) {
            w.u32(static_cast<std::uint32_t>(n.feature));
            w.f64(n.threshold);
            w.u32(static_cast<std::uint32_t>(n.left));
            w.u32(static_cast<std::uint32_t>(n.right));
            w.f64(n.value);
        }
    }
}

inline GbdtModel read_gbdt(ByteReader& r, std::size_t dim) {
    GbdtModel m;
    m.classes = read_classes(r);
    m.eta = r.f64();
    const auto g = r.u8();
    require(g <= 1, Errc::Corrupt, "unknown growth mode");
    m.growth = static_cast<Growth>(g);
    m.rounds = static_cast<int>(r.u32());
    m.degenerate_trees = r.u32();
    const auto nloss = r.u32();
    r.need(static_cast<std::size_t>(nloss) * 8);
    for (std::uint32_t i = 0; i < nloss; ++i) m.train_logloss.push_back(r.f64());
    const auto ntrees = r.u32();
    require(ntrees == static_cast<std::size_t>(m.rounds) * m.classes.size(), Errc::Corrupt, "tree count mismatch");
    for (std::uint32_t t = 0; t < ntrees; ++t) {
        RegressionTree tree;
        const auto nn = r.u32();
        require(nn >= 1, Errc::Corrupt, "empty tree");
        r.need(static_cast<std::size_t>(nn) * 28);
        tree.nodes.resize(nn);
        for (std::uint32_t i = 0; i < nn; ++i) {
            auto& n = tree.nodes[i];
            n.feature = static_cast<std::int32_t>(r.u32());
            n.threshold = r.f64();
            n.left = static_cast<std::int32_t>(r.u32());
            n.right = static_cast<std::int32_t>(r.u32());
            n.value = r.f64();
        }
        // Children must point forward so traversal always terminates.
        for (std::uint32_t i = 0; i < nn; ++i) {
            const auto& n = tree.nodes[i];
            if (n.feature < 0) continue;
            require(static_cast<std::size_t>(n.feature) < dim && n.left > static_cast<std::int32_t>(i) &&
                        n.right > static_cast<std::int32_t>(i) && n.left < static_cast<std::int32_t>(nn) &&
                        n.right < static_cast<std::int32_t>(nn),
                    Errc::Corrupt, "malformed tree node");
        }
        m.trees.push_back(std::move(tree));
    }
    return m;
}

}  // namespace detail

/**
 * PVML v1, little-endian:
 *
 *   "PVML" | u16 version=1 | u8 kind (0 svm, 1 gbdt)
 *   u16 n_blocks, n_blocks x ( u16 name_len | name | u32 dim )
 *   u8 has_standardizer [ u32 dim | dim x f64 mean | dim x f64 std ]
 *   svm params:  f64 C | u8 kernel | u8 has_gamma | f64 gamma | f64 tol | u64 max_iter
 *   gbdt params: u32 rounds | f64 eta | u8 growth | u32 max_depth | u32 max_leaves
 *                | u32 min_samples_leaf | u32 bins | f64 lambda
 *   u32 metadata_len | metadata (JSON text)
 *   kind-specific payload
 *
 * All reals are stored as f64 so predictions survive a round trip bit for bit.
 */
inline std::vector<std::uint8_t> encode_model(const Model& m) {
    ByteWriter w;
    w.bytes(std::string_view(kModelMagic, 4));
    w.u16(kModelVersion);
    w.u8(static_cast<std::uint8_t>(m.kind));
    detail::write_signature(w, m.signature);
    w.u8(m.standardizer ? 1 : 0);
    if (m.standardizer) {
        w.u32(static_cast<std::uint32_t>(m.standardizer->dim()));
        for (double v : m.standardizer->mean()) w.f64(v);
        for (double v : m.standardizer->stddev()) w.f64(v);
    }
    const auto& s = m.params.svm;
    w.f64(s.C);
    w.u8(static_cast<std::uint8_t>(s.kernel));
    w.u8(s.gamma ? 1 : 0);
    w.f64(s.gamma.value_or(0.0));
    w.f64(s.tol);
    w.u64(static_cast<std::uint64_t>(s.max_iter));
    const auto& g = m.params.gbdt;
    w.u32(static_cast<std::uint32_t>(g.rounds));
    w.f64(g.eta);
    w.u8(static_cast<std::uint8_t>(g.growth));
    w.u32(static_cast<std::uint32_t>(g.max_depth));
    w.u32(static_cast<std::uint32_t>(g.max_leaves));
    w.u32(static_cast<std::uint32_t>(g.min_samples_leaf));
    w.u32(static_cast<std::uint32_t>(g.bins));
    w.f64(g.lambda);
    w.str32(m.metadata);
    if (m.kind == ModelKind::Svm)
        detail::write_svm(w, m.svm());
    else
        detail::write_gbdt(w, m.gbdt());
    return w.take();
}

inline Model decode_model(std::span<const std::uint8_t> bytes, std::optional<ModelKind> expect = std::nullopt) {
    ByteReader r(bytes, Errc::Corrupt);
    r.need(4);
    if (r.bytes(4) != std::string_view(kModelMagic, 4)) throw Error(Errc::BadMagic, "not a PVML file");
    const auto version = r.u16();
    require(version == kModelVersion, Errc::VersionUnsupported, "PVML version " + std::to_string(version));
    const auto kind = r.u8();
    require(kind <= 1, Errc::Corrupt, "unknown model kind");
    Model m;
    m.kind = static_cast<ModelKind>(kind);
    if (expect && *expect != m.kind)
        throw Error(Errc::KindMismatch, "file holds a " + std::string(model_kind_name(m.kind)) + " model, expected " +
                                            std::string(model_kind_name(*expect)));
    m.signature = detail::read_signature(r);
    const std::size_t dim = m.signature.total_dim();
    if (r.u8()) {
        const auto d = r.u32();
        require(d == dim, Errc::Corrupt, "standardizer dim differs from signature");
        r.need(static_cast<std::size_t>(d) * 16);
        std::vector<double> mean(d), sd(d);
        for (auto& v : mean) v = r.f64();
        for (auto& v : sd) v = r.f64();
        m.standardizer = Standardizer(std::move(mean), std::move(sd));
    }
    auto& s = m.params.svm;
    s.C = r.f64();
    s.kernel = static_cast<KernelType>(r.u8());
    const bool has_gamma = r.u8() != 0;
    const double gamma = r.f64();
    if (has_gamma) s.gamma = gamma;
    s.tol = r.f64();
    s.max_iter = static_cast<long>(r.u64());
    auto& g = m.params.gbdt;
    g.rounds = static_cast<int>(r.u32());
    g.eta = r.f64();
    g.growth = static_cast<Growth>(r.u8());
    g.max_depth = static_cast<int>(r.u32());
    g.max_leaves = static_cast<int>(r.u32());
    g.min_samples_leaf = static_cast<int>(r.u32());
    g.bins = static_cast<int>(r.u32());
    g.lambda = r.f64();
    m.metadata = r.str32();
    if (m.kind == ModelKind::Svm) {
        auto svm = detail::read_svm(r);
        require(svm.support_vectors.cols() == dim, Errc::Corrupt, "support vector width differs from signature");
        m.body = std::move(svm);
    } else {
        m.body = detail::read_gbdt(r, dim);
    }
    require(r.at_end(), Errc::Corrupt, "trailing bytes after model payload");
    return m;
}

inline void save_model(const Model& m, const std::filesystem::path& path) { write_binary_file(path, encode_model(m)); }

inline Model load_model(const std::filesystem::path& path, std::optional<ModelKind> expect = std::nullopt) {
    return decode_model(read_binary_file(path), expect);
}

}  // namespace pvdefect
