#include <gtest/gtest.h>

#include <cstring>
#include <fstream>
#include <random>

#include "pvdefect/deepfeat.hpp"
#include "pvdefect/fusion.hpp"
#include "test_util.hpp"

using namespace pvdefect;

namespace {

FeatureBlock block(BlockKind k, std::size_t n, double base = 0.0) {
    FeatureBlock b;
    b.kind = k;
    for (std::size_t i = 0; i < n; ++i) b.values.push_back(base + static_cast<double>(i));
    return b;
}

std::vector<std::uint8_t> file_bytes(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), {}};
}

void put_u64(std::vector<std::uint8_t>& b, std::size_t at, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) b[at + i] = static_cast<std::uint8_t>(v >> (8 * i));
}

EmbeddingSet random_set(std::uint32_t dim, int n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<float> g;
    EmbeddingSet s(dim);
    for (int i = 0; i < n; ++i) {
        std::vector<float> v(dim);
        for (auto& x : v) x = g(rng);
        s.add("img_" + std::to_string((i * 7919) % 1000), std::move(v));
    }
    return s;
}

}  // namespace

TEST(Fuse, ConcatenatesInOrderWithSignature) {
    const auto fv = fuse_blocks({block(BlockKind::Deep, 1664), block(BlockKind::Gabor, 32, 5000)}, "a");
    ASSERT_EQ(fv.values.size(), 1696u);
    EXPECT_EQ(fv.signature.total_dim(), 1696u);
    EXPECT_EQ(fv.signature.to_string(), "DEEP(1664)+GABOR(32)");
    EXPECT_EQ(fv.values[1663], 1663.0);
    EXPECT_EQ(fv.values[1664], 5000.0);
    EXPECT_EQ(fv.sample_id, "a");

    const auto three = fuse_blocks({block(BlockKind::Lbp, 59), block(BlockKind::Hog, 8100), block(BlockKind::Gabor, 32)});
    EXPECT_EQ(three.values.size(), 59u + 8100u + 32u);
    EXPECT_EQ(three.signature.span_of(BlockKind::Hog), (std::pair<std::size_t, std::size_t>{59, 8100}));
}

TEST(Fuse, RejectsBadSelections) {
    EXPECT_ERRC(fuse_blocks({}), Errc::EmptySelection);
    EXPECT_ERRC(fuse_blocks({block(BlockKind::Lbp, 3), block(BlockKind::Lbp, 3)}), Errc::DuplicateBlock);
    EXPECT_ERRC(fuse_blocks({block(BlockKind::Gabor, 3), block(BlockKind::Deep, 3)}), Errc::OrderViolation);
}

TEST(Fuse, ConcatenationIsAssociative) {
    const auto a = block(BlockKind::Deep, 4, 0.5), b = block(BlockKind::Lbp, 3, 10), c = block(BlockKind::Hog, 5, 20);
    const auto ab = fuse_blocks({a, b});
    const auto ab_c = fuse_blocks({FeatureBlock{BlockKind::Deep, ab.values}, c});
    const auto abc = fuse_blocks({a, b, c});
    EXPECT_EQ(ab_c.values, abc.values);
}

TEST(Combo, ParseAndCanonicalOrder) {
    EXPECT_EQ(parse_combo("GABOR+DEEP"), (std::vector<BlockKind>{BlockKind::Deep, BlockKind::Gabor}));
    EXPECT_EQ(combo_name(parse_combo("hog,lbp")), "LBP+HOG");
    EXPECT_ERRC(parse_combo("SIFT"), Errc::InvalidArgument);
    EXPECT_ERRC(parse_combo(""), Errc::EmptySelection);
}

TEST(Standardizer, TwoPointColumn) {
    Matrix m(2, 1);
    m(0, 0) = 0;
    m(1, 0) = 2;
    const auto s = Standardizer::fit(m);
    const auto z = s.apply(m);
    EXPECT_DOUBLE_EQ(z(0, 0), -1.0);
    EXPECT_DOUBLE_EQ(z(1, 0), 1.0);
}

TEST(Standardizer, ConstantColumnPassesThroughCentred) {
    Matrix m(5, 2, 3.0);
    for (std::size_t r = 0; r < 5; ++r) m(r, 1) = static_cast<double>(r);
    const auto s = Standardizer::fit(m);
    EXPECT_EQ(s.stddev()[0], 1.0);
    const auto z = s.apply(m);
    for (std::size_t r = 0; r < 5; ++r) EXPECT_EQ(z(r, 0), 0.0);
}

TEST(Standardizer, MomentsAndInverseOnRandomData) {
    std::mt19937_64 rng(11);
    std::normal_distribution<double> g(0.0, 1.0);
    for (int trial = 0; trial < 20; ++trial) {
        const std::size_t n = 10 + trial * 7, d = 1 + trial % 6;
        Matrix m(n, d);
        for (std::size_t r = 0; r < n; ++r)
            for (std::size_t c = 0; c < d; ++c) m(r, c) = 100.0 * static_cast<double>(c) + (1.0 + c) * 37.0 * g(rng);
        const auto s = Standardizer::fit(m);
        const auto z = s.apply(m);
        for (std::size_t c = 0; c < d; ++c) {
            double mean = 0, var = 0;
            for (std::size_t r = 0; r < n; ++r) mean += z(r, c);
            mean /= static_cast<double>(n);
            for (std::size_t r = 0; r < n; ++r) var += (z(r, c) - mean) * (z(r, c) - mean);
            EXPECT_NEAR(mean, 0.0, 1e-9);
            EXPECT_NEAR(std::sqrt(var / static_cast<double>(n)), 1.0, 1e-6);
        }
        for (std::size_t r = 0; r < n; ++r) {
            const auto back = s.invert(z.row(r));
            for (std::size_t c = 0; c < d; ++c) EXPECT_NEAR(back[c], m(r, c), 1e-6 * std::max(1.0, std::abs(m(r, c))));
        }
    }
}

TEST(Standardizer, Errors) {
    EXPECT_ERRC(Standardizer::fit(Matrix{}), Errc::EmptyMatrix);
    const auto s = Standardizer::fit(Matrix(3, 2, 1.0));
    std::vector<double> v(3);
    EXPECT_ERRC(s.apply(std::span<const double>(v)), Errc::SignatureMismatch);
}

TEST(FeatureTable, AssembleFromSeveralSources) {
    FeatureTable hand(Signature{{{BlockKind::Lbp, 2}, {BlockKind::Gabor, 3}}});
    FeatureTable deep(Signature{{{BlockKind::Deep, 1}}});
    hand.add("a", std::vector<double>{1, 2, 3, 4, 5});
    hand.add("b", std::vector<double>{6, 7, 8, 9, 10});
    deep.add("b", std::vector<double>{-2});
    deep.add("a", std::vector<double>{-1});
    const auto t = assemble_features({"b", "a"}, {BlockKind::Gabor, BlockKind::Deep}, {&hand, &deep});
    EXPECT_EQ(t.signature().to_string(), "DEEP(1)+GABOR(3)");
    EXPECT_EQ(t.ids(), (std::vector<std::string>{"b", "a"}));
    const auto r0 = t.values().row(0);
    EXPECT_EQ(std::vector<double>(r0.begin(), r0.end()), (std::vector<double>{-2, 8, 9, 10}));
    EXPECT_ERRC(assemble_features({"a"}, {BlockKind::Hog}, {&hand, &deep}), Errc::MissingFeatures);
    EXPECT_ERRC(assemble_features({"zz"}, {BlockKind::Lbp}, {&hand}), Errc::MissingFeatures);
}

TEST(FeatureTable, RejectsBadRows) {
    FeatureTable t(Signature{{{BlockKind::Lbp, 2}}});
    EXPECT_ERRC(t.add("a", std::vector<double>{1}), Errc::SignatureMismatch);
    EXPECT_ERRC(t.add("a", std::vector<double>{1, std::nan("")}), Errc::NonFiniteFeature);
    t.add("a", std::vector<double>{1, 2});
    EXPECT_ERRC(t.add("a", std::vector<double>{1, 2}), Errc::DuplicateId);
}

TEST(FeatureStore, RoundTripAndErrors) {
    testutil::TempDir dir;
    FeatureTable t(Signature{{{BlockKind::Lbp, 2}, {BlockKind::Hog, 1}}});
    t.add("z", std::vector<double>{0.25, -1.5, 3});
    t.add("a", std::vector<double>{1, 2, 4});
    save_feature_store(t, dir / "f.pvfs");
    const auto back = load_feature_store(dir / "f.pvfs");
    EXPECT_EQ(back.signature(), t.signature());
    EXPECT_EQ(back.ids(), (std::vector<std::string>{"a", "z"}));
    const auto bz = *back.find("z"), tz = *t.find("z");
    EXPECT_EQ(std::vector<double>(bz.begin(), bz.end()), std::vector<double>(tz.begin(), tz.end()));

    auto bytes = encode_feature_store(t);
    auto bad = bytes;
    bad[0] = 'X';
    EXPECT_ERRC(decode_feature_store(bad), Errc::BadMagic);
    bad = bytes;
    bad[4] = 9;
    EXPECT_ERRC(decode_feature_store(bad), Errc::VersionUnsupported);
    bad = bytes;
    bad.push_back(0);
    EXPECT_ERRC(decode_feature_store(bad), Errc::Corrupt);
    bad.assign(bytes.begin(), bytes.end() - 15);  // drop the whole last record
    EXPECT_ERRC(decode_feature_store(bad), Errc::TruncatedFile);
    bad.assign(bytes.begin(), bytes.end() - 4);
    EXPECT_ERRC(decode_feature_store(bad), Errc::DimMismatch);
}

TEST(Embeddings, EmptySetIsEighteenBytes) {
    testutil::TempDir dir;
    write_embeddings(EmbeddingSet(4), dir / "e.pvem");
    const auto b = file_bytes(dir / "e.pvem");
    ASSERT_EQ(b.size(), 18u);
    EXPECT_EQ(std::string(b.begin(), b.begin() + 4), "PVEM");
    EXPECT_EQ(b[4], 1);
    EXPECT_EQ(b[5], 0);
    EXPECT_EQ(b[6], 4);
    const auto back = load_embeddings(dir / "e.pvem");
    EXPECT_EQ(back.dim(), 4u);
    EXPECT_TRUE(back.empty());
}

TEST(Embeddings, ExactRecordLayout) {
    EmbeddingSet s(2);
    s.add("ab", {1.0f, -2.5f});
    const auto b = encode_embeddings(s);
    ASSERT_EQ(b.size(), 18u + 2 + 2 + 8);
    EXPECT_EQ(b[10], 1);  // count
    EXPECT_EQ(b[18], 2);  // id length
    EXPECT_EQ(b[20], 'a');
    float x;
    std::memcpy(&x, b.data() + 26, 4);
    EXPECT_EQ(x, -2.5f);
}

TEST(Embeddings, RoundTripBitExactAndCanonical) {
    testutil::TempDir dir;
    const auto s = random_set(1664, 12, 3);
    write_embeddings(s, dir / "a.pvem");
    write_embeddings(s, dir / "b.pvem");
    EXPECT_EQ(file_bytes(dir / "a.pvem"), file_bytes(dir / "b.pvem"));
    const auto back = load_embeddings(dir / "a.pvem");
    EXPECT_EQ(back.dim(), 1664u);
    ASSERT_EQ(back.size(), s.size());
    for (const auto& [id, v] : s.entries()) {
        const auto* w = back.find(id);
        ASSERT_NE(w, nullptr);
        EXPECT_EQ(std::memcmp(v.data(), w->data(), v.size() * sizeof(float)), 0);
    }
}

TEST(Embeddings, LoaderErrors) {
    const auto s = random_set(3, 2, 5);
    const auto bytes = encode_embeddings(s);
    auto bad = bytes;
    std::memcpy(bad.data(), "XXXX", 4);
    EXPECT_ERRC(decode_embeddings(bad), Errc::BadMagic);
    bad = bytes;
    bad[4] = 2;
    EXPECT_ERRC(decode_embeddings(bad), Errc::VersionUnsupported);

    // count says 2 but only the first record is present
    const std::size_t rec = 2 + s.entries().begin()->first.size() + 3 * 4;
    bad.assign(bytes.begin(), bytes.begin() + static_cast<std::ptrdiff_t>(18 + rec));
    EXPECT_ERRC(decode_embeddings(bad), Errc::TruncatedFile);

    bad.assign(bytes.begin(), bytes.end() - 4);
    EXPECT_ERRC(decode_embeddings(bad), Errc::DimMismatch);

    bad = bytes;
    put_u64(bad, 10, 1);
    EXPECT_ERRC(decode_embeddings(bad), Errc::Corrupt);

    EmbeddingSet dup(1);
    dup.add("x", {1.0f});
    auto one = encode_embeddings(dup);
    auto two = one;
    two.insert(two.end(), one.begin() + 18, one.end());
    put_u64(two, 10, 2);
    EXPECT_ERRC(decode_embeddings(two), Errc::DuplicateId);

    EXPECT_ERRC(decode_embeddings(std::vector<std::uint8_t>{'P', 'V'}), Errc::TruncatedFile);
}

TEST(Embeddings, SetValidation) {
    EmbeddingSet s(2);
    EXPECT_ERRC(s.add("a", {1.0f}), Errc::DimMismatch);
    EXPECT_ERRC(s.add("", {1.0f, 2.0f}), Errc::InvalidArgument);
    EXPECT_ERRC(s.add("a", {1.0f, std::numeric_limits<float>::infinity()}), Errc::NonFiniteFeature);
}

TEST(SyntheticEmbeddings, ClassMeansConverge) {
    std::map<std::string, ClassLabel> labels;
    for (int i = 0; i < 600; ++i) labels["s" + std::to_string(i)] = label_from_code(i % 6);
    const auto set = synthetic_embeddings(labels, 8, 42, 10.0);
    std::array<std::array<double, 8>, 6> mean{};
    std::array<int, 6> n{};
    for (const auto& [id, v] : set.entries()) {
        const int c = label_code(labels.at(id));
        ++n[c];
        for (int d = 0; d < 8; ++d) mean[c][d] += v[d];
    }
    for (int c = 0; c < 6; ++c)
        for (int d = 0; d < 8; ++d) EXPECT_NEAR(mean[c][d] / n[c], d == c ? 10.0 : 0.0, 0.3) << c << "," << d;

    EXPECT_EQ(synthetic_embeddings(labels, 8, 42, 10.0), set);
    EXPECT_NE(synthetic_embeddings(labels, 8, 43, 10.0), set);
}

TEST(SyntheticEmbeddings, ZeroSeparationAndErrors) {
    std::map<std::string, ClassLabel> a{{"x", ClassLabel::Clean}}, b{{"x", ClassLabel::Dusty}};
    EXPECT_EQ(synthetic_embeddings(a, 4, 1, 0.0), synthetic_embeddings(b, 4, 1, 0.0));
    EXPECT_ERRC(synthetic_embeddings({}, 4, 1, 1.0), Errc::EmptyLabels);
    EXPECT_ERRC(synthetic_embeddings(a, 1, 1, 1.0), Errc::InvalidArgument);
    EXPECT_ERRC(synthetic_embeddings(a, 4, 1, -1.0), Errc::InvalidArgument);
}
