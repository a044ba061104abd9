#pragma once

#include <array>
#include <cmath>
#include <string>
#include <vector>

#include "dataset.hpp"
#include "rng.hpp"

namespace pvdefect {

/**
 * Stratified train/test split over lineage groups. Each original sample and
 * all of its augmented descendants form one group that lands in a single
 * split. Per class, round(test_frac * n_c) groups go to test, where n_c
 * counts originals; at least one group always stays in train.
 */
inline LabeledDataset stratified_split(const LabeledDataset& ds, double test_frac = 0.2, std::uint64_t seed = 0) {
    require(test_frac >= 0.0 && test_frac < 1.0, Errc::InvalidConfig, "test fraction must lie in [0, 1)");
    require(!ds.empty(), Errc::EmptyDataset, "cannot split an empty dataset");

    auto root_of = [&](const DatasetEntry& e) {
        const DatasetEntry* cur = &e;
        for (std::size_t hops = 0; !cur->is_original(); ++hops) {
            const auto* p = ds.find(cur->parent);
            require(p != nullptr && hops < ds.size(), Errc::InvalidArgument,
                    e.id + " has a broken lineage chain");
            cur = p;
        }
        return cur;
    };

    std::array<std::vector<std::string>, kNumClasses> roots;
    for (const auto& e : ds.entries())
        if (e.is_original()) roots[label_code(e.label)].push_back(e.id);

    std::unordered_map<std::string, Split> assign;
    for (int c = 0; c < kNumClasses; ++c) {
        auto& ids = roots[c];
        if (ids.empty()) continue;
        const auto n = ids.size();
        std::size_t n_test = static_cast<std::size_t>(std::lround(test_frac * static_cast<double>(n)));
        if (test_frac > 0.0) {
            require(n >= 2, Errc::ClassTooSmall,
                    std::string(label_name(label_from_code(c))) + " has " + std::to_string(n) + " sample(s); need 2");
            n_test = std::min(n_test, n - 1);
        }
        auto rng = keyed_rng(seed, std::string("split/") + std::string(label_name(label_from_code(c))));
        for (std::size_t i = n - 1; i > 0; --i) std::swap(ids[i], ids[rng() % (i + 1)]);
        for (std::size_t i = 0; i < n; ++i) assign[ids[i]] = i < n_test ? Split::Test : Split::Train;
    }

    LabeledDataset out;
    for (const auto& e : ds.entries()) {
        DatasetEntry copy = e;
        copy.split = assign.at(root_of(e)->id);
        out.add(std::move(copy));
    }
    return out;
}

}  // namespace pvdefect
