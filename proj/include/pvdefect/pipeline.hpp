#pragma once

#include <filesystem>
#include <functional>
#include <optional>
#include <vector>

#include "augment.hpp"
#include "dataset.hpp"
#include "fusion.hpp"
#include "handcrafted.hpp"
#include "image_io.hpp"
#include "parallel.hpp"
#include "preprocess.hpp"

namespace pvdefect {

/// Produces the pixels of a manifest entry.
using ImageSource = std::function<ImageU8(const DatasetEntry&)>;

/// Reads `root / entry.path` and applies the entry's augmentation transform, if any.
inline ImageSource file_image_source(std::filesystem::path root) {
    return [root = std::move(root)](const DatasetEntry& e) {
        std::filesystem::path p(e.path);
        ImageU8 img = load_image(p.is_absolute() || root.empty() ? p : root / p);
        return e.transform.empty() ? img : apply_transform(img, e.transform);
    };
}

/**
 * Handcrafted feature table over every entry of `ds`, rows in manifest
 * order. With `pre` set, each image is preprocessed first. Errors name the
 * failing sample.
 */
inline FeatureTable extract_feature_table(const LabeledDataset& ds, const std::vector<BlockKind>& which,
                                          const HandcraftedConfig& cfg, const ImageSource& source, int jobs = 1,
                                          const std::optional<PreprocessConfig>& pre = std::nullopt) {
    require(!ds.empty(), Errc::EmptyDataset, "no samples to extract");
    const auto kinds = canonical_blocks(which);
    std::vector<std::vector<FeatureBlock>> blocks(ds.size());
    parallel_for(ds.size(), jobs, [&](std::size_t i) {
        const auto& e = ds[i];
        try {
            ImageU8 img = source(e);
            if (pre) img = preprocess_pipeline(img, *pre);
            blocks[i] = extract_handcrafted(img, kinds, cfg);
        } catch (const Error& err) {
            throw Error(err.code(), e.id + ": " + err.what());
        }
    });
    Signature sig;
    for (const auto& b : blocks[0]) sig.blocks.emplace_back(b.kind, b.dim());
    FeatureTable table(sig);
    std::vector<double> row;
    for (std::size_t i = 0; i < ds.size(); ++i) {
        row.clear();
        for (std::size_t k = 0; k < blocks[i].size(); ++k) {
            require(blocks[i][k].dim() == sig.blocks[k].second, Errc::DimMismatch,
                    ds[i].id + ": " + std::string(block_name(blocks[i][k].kind)) + " length differs from first sample");
            row.insert(row.end(), blocks[i][k].values.begin(), blocks[i][k].values.end());
        }
        table.add(ds[i].id, row);
    }
    return table;
}

}  // namespace pvdefect
