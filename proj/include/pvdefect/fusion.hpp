#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <span>
#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "binary_io.hpp"
#include "deepfeat.hpp"
#include "features.hpp"
#include "matrix.hpp"

namespace pvdefect {

/// Ordered (block, dim) list describing the layout of a fused vector.
struct Signature {
    std::vector<std::pair<BlockKind, std::size_t>> blocks;

    std::size_t total_dim() const {
        std::size_t n = 0;
        for (const auto& b : blocks) n += b.second;
        return n;
    }
    std::vector<BlockKind> kinds() const {
        std::vector<BlockKind> k;
        for (const auto& b : blocks) k.push_back(b.first);
        return k;
    }
    bool has(BlockKind k) const {
        for (const auto& b : blocks)
            if (b.first == k) return true;
        return false;
    }
    /// Column offset and width of block `k`.
    std::pair<std::size_t, std::size_t> span_of(BlockKind k) const {
        std::size_t off = 0;
        for (const auto& b : blocks) {
            if (b.first == k) return {off, b.second};
            off += b.second;
        }
        throw Error(Errc::MissingFeatures, "signature has no " + std::string(block_name(k)) + " block");
    }
    std::string to_string() const {
        std::string s;
        for (const auto& b : blocks) {
            if (!s.empty()) s += '+';
            s += std::string(block_name(b.first)) + "(" + std::to_string(b.second) + ")";
        }
        return s;
    }
    friend bool operator==(const Signature&, const Signature&) = default;
};

struct FeatureVector {
    std::string sample_id;
    std::vector<double> values;
    Signature signature;
};

/// Concatenates blocks that are already in canonical order DEEP, LBP, HOG, GABOR.
inline FeatureVector fuse_blocks(const std::vector<FeatureBlock>& blocks, std::string sample_id = {}) {
    require(!blocks.empty(), Errc::EmptySelection, "nothing to fuse");
    std::set<BlockKind> seen;
    for (const auto& b : blocks)
        require(seen.insert(b.kind).second, Errc::DuplicateBlock,
                "block " + std::string(block_name(b.kind)) + " appears twice");
    for (std::size_t i = 1; i < blocks.size(); ++i)
        require(blocks[i - 1].kind < blocks[i].kind, Errc::OrderViolation,
                "blocks must follow the order DEEP, LBP, HOG, GABOR");
    FeatureVector fv;
    fv.sample_id = std::move(sample_id);
    for (const auto& b : blocks) {
        fv.values.insert(fv.values.end(), b.values.begin(), b.values.end());
        fv.signature.blocks.emplace_back(b.kind, b.dim());
    }
    return fv;
}

// ---------------------------------------------------------------------------

/**
 * Per-dimension z-scoring fitted on the training split. Dimensions whose
 * spread is numerically zero keep sigma = 1 so they pass through centred.
 */
class Standardizer {
public:
    Standardizer() = default;
    Standardizer(std::vector<double> mean, std::vector<double> stddev)
        : mean_(std::move(mean)), std_(std::move(stddev)) {
        require(mean_.size() == std_.size(), Errc::DimMismatch, "standardizer mean/std length mismatch");
    }

    static Standardizer fit(const Matrix& train) {
        require(!train.empty(), Errc::EmptyMatrix, "cannot fit a standardizer on zero rows");
        const std::size_t n = train.rows(), d = train.cols();
        std::vector<double> mean(d, 0.0), sd(d, 0.0);
        for (std::size_t r = 0; r < n; ++r) {
            auto row = train.row(r);
            for (std::size_t c = 0; c < d; ++c) mean[c] += row[c];
        }
        for (auto& m : mean) m /= static_cast<double>(n);
        for (std::size_t r = 0; r < n; ++r) {
            auto row = train.row(r);
            for (std::size_t c = 0; c < d; ++c) {
                const double t = row[c] - mean[c];
                sd[c] += t * t;
            }
        }
        for (std::size_t c = 0; c < d; ++c) {
            sd[c] = std::sqrt(sd[c] / static_cast<double>(n));
            if (sd[c] <= 1e-12 * std::max(1.0, std::abs(mean[c]))) sd[c] = 1.0;
        }
        return Standardizer(std::move(mean), std::move(sd));
    }

    std::size_t dim() const { return mean_.size(); }
    const std::vector<double>& mean() const { return mean_; }
    const std::vector<double>& stddev() const { return std_; }

    void apply_inplace(std::span<double> v) const {
        require(v.size() == mean_.size(), Errc::SignatureMismatch,
                "vector length " + std::to_string(v.size()) + " != standardizer dim " + std::to_string(dim()));
        for (std::size_t i = 0; i < v.size(); ++i) v[i] = (v[i] - mean_[i]) / std_[i];
    }
    std::vector<double> apply(std::span<const double> v) const {
        std::vector<double> out(v.begin(), v.end());
        apply_inplace(out);
        return out;
    }
    Matrix apply(const Matrix& m) const {
        Matrix out = m;
        for (std::size_t r = 0; r < out.rows(); ++r) apply_inplace(out.row(r));
        return out;
    }
    std::vector<double> invert(std::span<const double> z) const {
        require(z.size() == mean_.size(), Errc::SignatureMismatch, "vector length differs from standardizer dim");
        std::vector<double> out(z.size());
        for (std::size_t i = 0; i < z.size(); ++i) out[i] = z[i] * std_[i] + mean_[i];
        return out;
    }

    friend bool operator==(const Standardizer&, const Standardizer&) = default;

private:
    std::vector<double> mean_;
    std::vector<double> std_;
};

// ---------------------------------------------------------------------------
// Feature table and feature store

/// Samples x features with a block signature; row order is insertion order.
class FeatureTable {
public:
    FeatureTable() = default;
    explicit FeatureTable(Signature sig) : sig_(std::move(sig)), values_(0, sig_.total_dim()) {}

    const Signature& signature() const { return sig_; }
    const std::vector<std::string>& ids() const { return ids_; }
    const Matrix& values() const { return values_; }
    std::size_t size() const { return ids_.size(); }

    void add(const std::string& id, std::span<const double> v) {
        require(!id.empty(), Errc::InvalidArgument, "feature ids must be non-empty");
        require(v.size() == sig_.total_dim(), Errc::SignatureMismatch,
                id + ": vector length " + std::to_string(v.size()) + " != " + std::to_string(sig_.total_dim()));
        for (double x : v) require(std::isfinite(x), Errc::NonFiniteFeature, id + ": non-finite feature");
        require(index_.emplace(id, ids_.size()).second, Errc::DuplicateId, "duplicate feature id " + id);
        ids_.push_back(id);
        values_.append_row(v);
    }

    std::optional<std::span<const double>> find(const std::string& id) const {
        auto it = index_.find(id);
        if (it == index_.end()) return std::nullopt;
        return values_.row(it->second);
    }

    friend bool operator==(const FeatureTable& a, const FeatureTable& b) {
        return a.sig_ == b.sig_ && a.ids_ == b.ids_ && a.values_ == b.values_;
    }

private:
    Signature sig_;
    std::vector<std::string> ids_;
    Matrix values_;
    std::unordered_map<std::string, std::size_t> index_;
};

/// Wraps an embedding set as a single-block DEEP table.
inline FeatureTable table_from_embeddings(const EmbeddingSet& set) {
    FeatureTable t(Signature{{{BlockKind::Deep, set.dim()}}});
    std::vector<double> row(set.dim());
    for (const auto& [id, v] : set.entries()) {
        std::copy(v.begin(), v.end(), row.begin());
        t.add(id, row);
    }
    return t;
}

/**
 * Builds the fused matrix for `ids` over the blocks in `combo`, pulling
 * each block from whichever source table carries it. Rows follow `ids`.
 */
inline FeatureTable assemble_features(const std::vector<std::string>& ids, const std::vector<BlockKind>& combo,
                                      const std::vector<const FeatureTable*>& sources) {
    const auto kinds = canonical_blocks(combo);
    require(!kinds.empty(), Errc::EmptySelection, "empty feature combination");
    struct Part {
        const FeatureTable* table;
        std::size_t offset, width;
    };
    std::vector<Part> parts;
    Signature sig;
    for (BlockKind k : kinds) {
        const FeatureTable* src = nullptr;
        for (const auto* t : sources)
            if (t && t->signature().has(k)) {
                src = t;
                break;
            }
        require(src != nullptr, Errc::MissingFeatures, "no source provides " + std::string(block_name(k)));
        const auto [off, width] = src->signature().span_of(k);
        parts.push_back({src, off, width});
        sig.blocks.emplace_back(k, width);
    }
    FeatureTable out(sig);
    std::vector<double> row(sig.total_dim());
    for (const auto& id : ids) {
        std::size_t pos = 0;
        for (const auto& p : parts) {
            const auto src_row = p.table->find(id);
            require(src_row.has_value(), Errc::MissingFeatures, "sample " + id + " lacks features");
            std::copy_n(src_row->begin() + p.offset, p.width, row.begin() + pos);
            pos += p.width;
        }
        out.add(id, row);
    }
    return out;
}

inline constexpr char kFeatureStoreMagic[4] = {'P', 'V', 'F', 'S'};
inline constexpr std::uint16_t kFeatureStoreVersion = 1;

/**
 * PVFS v1 feature store, little-endian:
 *
 *   "PVFS" | u16 version=1 | u16 n_blocks
 *   n_blocks x ( u16 name_len | name | u32 dim )
 *   u64 count
 *   count x ( u16 id_len | id | total_dim x f32 )
 *
 * Records are sorted by id.
 */
inline std::vector<std::uint8_t> encode_feature_store(const FeatureTable& t) {
    ByteWriter w;
    w.bytes(std::string_view(kFeatureStoreMagic, 4));
    w.u16(kFeatureStoreVersion);
    w.u16(static_cast<std::uint16_t>(t.signature().blocks.size()));
    for (const auto& [k, d] : t.signature().blocks) {
        w.str16(block_name(k));
        w.u32(static_cast<std::uint32_t>(d));
    }
    w.u64(t.size());
    std::vector<std::size_t> order(t.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return t.ids()[a] < t.ids()[b]; });
    for (std::size_t i : order) {
        w.str16(t.ids()[i]);
        for (double x : t.values().row(i)) w.f32(static_cast<float>(x));
    }
    return w.take();
}

inline FeatureTable decode_feature_store(std::span<const std::uint8_t> bytes) {
    ByteReader r(bytes, Errc::TruncatedFile);
    r.need(4);
    if (r.bytes(4) != std::string_view(kFeatureStoreMagic, 4)) throw Error(Errc::BadMagic, "not a PVFS file");
    const auto version = r.u16();
    require(version == kFeatureStoreVersion, Errc::VersionUnsupported, "PVFS version " + std::to_string(version));
    const auto nblocks = r.u16();
    Signature sig;
    for (int i = 0; i < nblocks; ++i) {
        const std::string name = r.str16();
        const auto kind = parse_block(name);
        require(kind.has_value(), Errc::Corrupt, "unknown block name " + name);
        sig.blocks.emplace_back(*kind, r.u32());
    }
    require(canonical_blocks(sig.kinds()) == sig.kinds() && sig.kinds().size() == nblocks, Errc::Corrupt,
            "feature store blocks out of canonical order");
    const auto count = r.u64();
    FeatureTable t(sig);
    std::vector<double> row(sig.total_dim());
    for (std::uint64_t i = 0; i < count; ++i) {
        if (r.at_end()) throw Error(Errc::TruncatedFile, "feature store ends before record " + std::to_string(i));
        const std::string id = r.str16();
        if (r.remaining() < row.size() * 4) throw Error(Errc::DimMismatch, id + ": record shorter than its signature");
        for (auto& x : row) x = r.f32();
        t.add(id, row);
    }
    require(r.at_end(), Errc::Corrupt, "trailing bytes after the last declared record");
    return t;
}

inline void save_feature_store(const FeatureTable& t, const std::filesystem::path& path) {
    write_binary_file(path, encode_feature_store(t));
}

inline FeatureTable load_feature_store(const std::filesystem::path& path) {
    return decode_feature_store(read_binary_file(path));
}

}  // namespace pvdefect
