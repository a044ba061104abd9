#pragma once

#include <nlohmann/json.hpp>

#include <algorithm>
#include <array>
#include <cctype>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include "image.hpp"

namespace pvdefect {

enum class Split { Train, Test, Unassigned };

inline std::string_view split_name(Split s) {
    switch (s) {
        case Split::Train: return "train";
        case Split::Test: return "test";
        case Split::Unassigned: return "unassigned";
    }
    return "unassigned";
}

inline Split parse_split(std::string_view s) {
    if (s == "train") return Split::Train;
    if (s == "test") return Split::Test;
    if (s == "unassigned" || s.empty()) return Split::Unassigned;
    throw Error(Errc::InvalidArgument, "unknown split tag '" + std::string(s) + "'");
}

struct DatasetEntry {
    std::string id;
    std::string path;
    ClassLabel label = ClassLabel::Clean;
    Split split = Split::Unassigned;
    std::string parent;     // empty for originals
    std::string transform;  // augmentation applied to the parent image, empty for originals

    bool is_original() const { return parent.empty(); }
    friend bool operator==(const DatasetEntry&, const DatasetEntry&) = default;
};

/// Ordered sample list with unique ids and augmentation lineage.
class LabeledDataset {
public:
    LabeledDataset() = default;
    explicit LabeledDataset(std::vector<DatasetEntry> entries) {
        for (auto& e : entries) add(std::move(e));
    }

    void add(DatasetEntry e) {
        require(!e.id.empty(), Errc::InvalidArgument, "dataset ids must be non-empty");
        require(index_.emplace(e.id, entries_.size()).second, Errc::DuplicateId, "duplicate id " + e.id);
        entries_.push_back(std::move(e));
    }

    std::size_t size() const { return entries_.size(); }
    bool empty() const { return entries_.empty(); }
    const std::vector<DatasetEntry>& entries() const { return entries_; }
    const DatasetEntry& operator[](std::size_t i) const { return entries_[i]; }
    DatasetEntry& mutable_entry(std::size_t i) { return entries_[i]; }

    const DatasetEntry* find(const std::string& id) const {
        auto it = index_.find(id);
        return it == index_.end() ? nullptr : &entries_[it->second];
    }

    std::array<std::size_t, kNumClasses> class_counts() const {
        std::array<std::size_t, kNumClasses> c{};
        for (const auto& e : entries_) ++c[label_code(e.label)];
        return c;
    }

    /// Entries with the given split tag. When no entry carries any tag, Train selects everything.
    std::vector<const DatasetEntry*> select(Split s) const {
        std::vector<const DatasetEntry*> out;
        const bool any_tagged =
            std::any_of(entries_.begin(), entries_.end(), [](auto& e) { return e.split != Split::Unassigned; });
        for (const auto& e : entries_)
            if (e.split == s || (!any_tagged && s == Split::Train)) out.push_back(&e);
        return out;
    }

    /// Throws unless every child's parent exists and shares its split.
    void check_lineage() const {
        for (const auto& e : entries_) {
            if (e.is_original()) continue;
            const auto* p = find(e.parent);
            require(p != nullptr, Errc::InvalidArgument, e.id + " references unknown parent " + e.parent);
            require(p->split == e.split, Errc::InvalidArgument, e.id + " is split apart from its parent");
        }
    }

    friend bool operator==(const LabeledDataset& a, const LabeledDataset& b) { return a.entries_ == b.entries_; }

private:
    std::vector<DatasetEntry> entries_;
    std::unordered_map<std::string, std::size_t> index_;
};

// ---------------------------------------------------------------------------
// Manifest: JSON lines, one object per sample
//   {"id": ..., "path": ..., "label": "Dusty", "split": "train", "parent": ""}
// An optional "transform" key records the augmentation that produced a child.

inline std::string entry_to_line(const DatasetEntry& e) {
    nlohmann::ordered_json j;
    j["id"] = e.id;
    j["path"] = e.path;
    j["label"] = std::string(label_name(e.label));
    j["split"] = std::string(split_name(e.split));
    j["parent"] = e.parent;
    if (!e.transform.empty()) j["transform"] = e.transform;
    return j.dump();
}

inline DatasetEntry entry_from_json(const nlohmann::json& j) {
    DatasetEntry e;
    e.id = j.at("id").get<std::string>();
    e.path = j.value("path", std::string{});
    const auto& lab = j.at("label");
    if (lab.is_number_integer()) {
        e.label = label_from_code(lab.get<int>());
    } else {
        const auto parsed = parse_label(lab.get<std::string>());
        require(parsed.has_value(), Errc::LabelOutOfRange, "unknown label " + lab.get<std::string>());
        e.label = *parsed;
    }
    e.split = parse_split(j.value("split", std::string{"unassigned"}));
    if (j.contains("parent") && !j.at("parent").is_null()) e.parent = j.at("parent").get<std::string>();
    e.transform = j.value("transform", std::string{});
    return e;
}

inline std::string manifest_to_string(const LabeledDataset& ds) {
    std::string out;
    for (const auto& e : ds.entries()) {
        out += entry_to_line(e);
        out += '\n';
    }
    return out;
}

inline LabeledDataset manifest_from_string(const std::string& text) {
    LabeledDataset ds;
    std::istringstream in(text);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            ds.add(entry_from_json(nlohmann::json::parse(line)));
        } catch (const nlohmann::json::exception& ex) {
            throw Error(Errc::Corrupt, "manifest line " + std::to_string(lineno) + ": " + ex.what());
        }
    }
    return ds;
}

inline void save_manifest(const LabeledDataset& ds, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    require(static_cast<bool>(out), Errc::IoError, "cannot write " + path.string());
    out << manifest_to_string(ds);
}

inline LabeledDataset load_manifest(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    require(static_cast<bool>(in), Errc::FileNotFound, path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return manifest_from_string(ss.str());
}

/**
 * Builds a manifest from a directory with one sub-directory per class
 * (names resolved with parse_label). Ids are "<class-dir>/<file-stem>".
 * Files that are not PNG/PGM/PPM are reported through `skipped`.
 */
inline LabeledDataset ingest_directory(const std::filesystem::path& root,
                                       std::vector<std::string>* skipped = nullptr) {
    namespace fs = std::filesystem;
    require(fs::is_directory(root), Errc::FileNotFound, root.string() + " is not a directory");
    std::vector<fs::path> class_dirs;
    for (const auto& d : fs::directory_iterator(root))
        if (d.is_directory()) class_dirs.push_back(d.path());
    std::sort(class_dirs.begin(), class_dirs.end());
    LabeledDataset ds;
    for (const auto& dir : class_dirs) {
        const auto label = parse_label(dir.filename().string());
        if (!label) {
            if (skipped) skipped->push_back(dir.string() + " (unknown class directory)");
            continue;
        }
        std::vector<fs::path> files;
        for (const auto& f : fs::recursive_directory_iterator(dir))
            if (f.is_regular_file()) files.push_back(f.path());
        std::sort(files.begin(), files.end());
        for (const auto& f : files) {
            std::string ext = f.extension().string();
            std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
            if (ext != ".png" && ext != ".pgm" && ext != ".ppm") {
                if (skipped) skipped->push_back(f.string());
                continue;
            }
            DatasetEntry e;
            const auto rel = fs::relative(f, dir).replace_extension();
            e.id = dir.filename().string() + "/" + rel.generic_string();
            e.path = f.string();
            e.label = *label;
            ds.add(std::move(e));
        }
    }
    return ds;
}

}  // namespace pvdefect
