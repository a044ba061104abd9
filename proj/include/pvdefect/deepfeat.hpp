#pragma once

#include <cmath>
#include <filesystem>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "binary_io.hpp"
#include "image.hpp"
#include "rng.hpp"

namespace pvdefect {

/// Deep embeddings keyed by sample id. Iteration order is id order.
class EmbeddingSet {
public:
    EmbeddingSet() = default;
    explicit EmbeddingSet(std::uint32_t dim) : dim_(dim) {
        require(dim >= 1, Errc::DimMismatch, "embedding dim must be >= 1");
    }

    std::uint32_t dim() const { return dim_; }
    std::size_t size() const { return entries_.size(); }
    bool empty() const { return entries_.empty(); }

    void add(const std::string& id, std::vector<float> v) {
        require(!id.empty(), Errc::InvalidArgument, "embedding ids must be non-empty");
        require(v.size() == dim_, Errc::DimMismatch,
                id + ": vector length " + std::to_string(v.size()) + " != dim " + std::to_string(dim_));
        for (float x : v) require(std::isfinite(x), Errc::NonFiniteFeature, id + ": non-finite embedding value");
        require(entries_.emplace(id, std::move(v)).second, Errc::DuplicateId, "duplicate embedding id " + id);
    }

    const std::vector<float>* find(const std::string& id) const {
        auto it = entries_.find(id);
        return it == entries_.end() ? nullptr : &it->second;
    }

    const std::map<std::string, std::vector<float>>& entries() const { return entries_; }

    friend bool operator==(const EmbeddingSet&, const EmbeddingSet&) = default;

private:
    std::uint32_t dim_ = 1;
    std::map<std::string, std::vector<float>> entries_;
};

inline constexpr char kEmbeddingMagic[4] = {'P', 'V', 'E', 'M'};
inline constexpr std::uint16_t kEmbeddingVersion = 1;
inline constexpr std::size_t kEmbeddingHeaderBytes = 4 + 2 + 4 + 8;

/**
 * PVEM v1, all integers little-endian:
 *
 *   "PVEM" | u16 version=1 | u32 dim | u64 count
 *   count x ( u16 id_len | id bytes (UTF-8) | dim x f32 )
 *
 * Records are written in id order, so equal sets give identical bytes.
 */
inline std::vector<std::uint8_t> encode_embeddings(const EmbeddingSet& set) {
    ByteWriter w;
    w.bytes(std::string_view(kEmbeddingMagic, 4));
    w.u16(kEmbeddingVersion);
    w.u32(set.dim());
    w.u64(set.size());
    for (const auto& [id, v] : set.entries()) {
        w.str16(id);
        for (float x : v) w.f32(x);
    }
    return w.take();
}

inline EmbeddingSet decode_embeddings(std::span<const std::uint8_t> bytes) {
    ByteReader r(bytes, Errc::TruncatedFile);
    if (bytes.size() >= 4 && std::string_view(reinterpret_cast<const char*>(bytes.data()), 4) !=
                                 std::string_view(kEmbeddingMagic, 4))
        throw Error(Errc::BadMagic, "not a PVEM file");
    r.need(kEmbeddingHeaderBytes);
    r.bytes(4);
    const auto version = r.u16();
    require(version == kEmbeddingVersion, Errc::VersionUnsupported, "PVEM version " + std::to_string(version));
    const auto dim = r.u32();
    require(dim >= 1, Errc::Corrupt, "PVEM dim must be >= 1");
    const auto count = r.u64();
    EmbeddingSet set(dim);
    for (std::uint64_t i = 0; i < count; ++i) {
        if (r.at_end())
            throw Error(Errc::TruncatedFile, "header declares " + std::to_string(count) + " records, found " +
                                                 std::to_string(i));
        const std::string id = r.str16();
        require(!id.empty(), Errc::Corrupt, "empty embedding id");
        if (r.remaining() < static_cast<std::size_t>(dim) * 4)
            throw Error(Errc::DimMismatch, id + ": record shorter than dim x 4 bytes");
        std::vector<float> v(dim);
        for (auto& x : v) x = r.f32();
        set.add(id, std::move(v));
    }
    require(r.at_end(), Errc::Corrupt, "trailing bytes after the last declared record");
    return set;
}

inline void write_embeddings(const EmbeddingSet& set, const std::filesystem::path& path) {
    write_binary_file(path, encode_embeddings(set));
}

inline EmbeddingSet load_embeddings(const std::filesystem::path& path) {
    return decode_embeddings(read_binary_file(path));
}

/**
 * Class-conditional Gaussian embeddings for running the pipeline without a
 * neural network: sample = separation * e_(class mod dim) + N(0, I), with the
 * noise drawn from a stream keyed by (seed, id).
 */
inline EmbeddingSet synthetic_embeddings(const std::map<std::string, ClassLabel>& labels, std::uint32_t dim,
                                         std::uint64_t seed, double separation) {
    require(!labels.empty(), Errc::EmptyLabels, "no samples to embed");
    require(dim >= 2, Errc::InvalidArgument, "synthetic embedding dim must be >= 2");
    require(separation >= 0.0, Errc::InvalidArgument, "separation must be >= 0");
    EmbeddingSet set(dim);
    for (const auto& [id, label] : labels) {
        auto rng = keyed_rng(seed, id, 0xe3b);
        std::normal_distribution<double> noise(0.0, 1.0);
        std::vector<float> v(dim);
        for (auto& x : v) x = static_cast<float>(noise(rng));
        v[label_code(label) % dim] += static_cast<float>(separation);
        set.add(id, std::move(v));
    }
    return set;
}

}  // namespace pvdefect
