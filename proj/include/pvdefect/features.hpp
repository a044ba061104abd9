#pragma once

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <cmath>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "error.hpp"

namespace pvdefect {

/// Feature families, declared in canonical fusion order.
enum class BlockKind : std::uint8_t { Deep = 0, Lbp = 1, Hog = 2, Gabor = 3 };

inline constexpr BlockKind kAllBlockKinds[] = {BlockKind::Deep, BlockKind::Lbp, BlockKind::Hog, BlockKind::Gabor};

inline std::string_view block_name(BlockKind k) {
    switch (k) {
        case BlockKind::Deep: return "DEEP";
        case BlockKind::Lbp: return "LBP";
        case BlockKind::Hog: return "HOG";
        case BlockKind::Gabor: return "GABOR";
    }
    return "?";
}

inline std::optional<BlockKind> parse_block(std::string_view name) {
    std::string k;
    for (char c : name) k.push_back(static_cast<char>(std::toupper(static_cast<unsigned char>(c))));
    if (k == "DEEP" || k == "DENSENET" || k == "DENSENET169" || k == "DENSENET-169") return BlockKind::Deep;
    if (k == "LBP") return BlockKind::Lbp;
    if (k == "HOG") return BlockKind::Hog;
    if (k == "GABOR") return BlockKind::Gabor;
    return std::nullopt;
}

struct FeatureBlock {
    BlockKind kind = BlockKind::Lbp;
    std::vector<double> values;

    std::size_t dim() const { return values.size(); }
    bool finite() const {
        return std::all_of(values.begin(), values.end(), [](double v) { return std::isfinite(v); });
    }
};

/// Sorted, de-duplicated selection of block kinds.
inline std::vector<BlockKind> canonical_blocks(std::vector<BlockKind> kinds) {
    std::sort(kinds.begin(), kinds.end());
    kinds.erase(std::unique(kinds.begin(), kinds.end()), kinds.end());
    return kinds;
}

/// Parses "DEEP+GABOR" or "LBP,HOG" into a canonical selection.
inline std::vector<BlockKind> parse_combo(std::string_view text) {
    std::vector<BlockKind> out;
    std::string cur;
    auto flush = [&] {
        if (cur.empty()) return;
        const auto k = parse_block(cur);
        require(k.has_value(), Errc::InvalidArgument, "unknown feature block '" + cur + "'");
        out.push_back(*k);
        cur.clear();
    };
    for (char c : text) {
        if (c == '+' || c == ',' || c == ' ') flush();
        else cur.push_back(c);
    }
    flush();
    require(!out.empty(), Errc::EmptySelection, "empty feature combination");
    return canonical_blocks(out);
}

inline std::string combo_name(const std::vector<BlockKind>& kinds) {
    std::string s;
    for (auto k : kinds) {
        if (!s.empty()) s += '+';
        s += block_name(k);
    }
    return s;
}

}  // namespace pvdefect
