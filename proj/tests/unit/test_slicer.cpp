#include "esod/error.hpp"
#include "esod/labels.hpp"
#include "esod/slicer.hpp"
#include "oracles.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <random>

using namespace esod;

namespace {

Grid2D blob_mask(int h, int w, int blobs, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> px(0.0, w - 1.0);
    std::uniform_real_distribution<double> py(0.0, h - 1.0);
    std::uniform_real_distribution<double> ext(0.6, 5.0);
    std::vector<BoundingBox> boxes;
    for (int i = 0; i < blobs; ++i) boxes.push_back(BoundingBox{px(rng), py(rng), ext(rng), ext(rng), 1});
    return gaussian_mask(boxes, h, w).grid;
}

std::vector<std::pair<int, int>> activated_cells(const BitGrid& act, const PatchBox& box) {
    std::vector<std::pair<int, int>> out;
    for (int y = std::max(0, box.y1); y < std::min(act.height(), box.y2); ++y)
        for (int x = std::max(0, box.x1); x < std::min(act.width(), box.x2); ++x)
            if (act.test(y, x)) out.emplace_back(x, y);
    return out;
}

void expect_fixed_and_in_bounds(const PatchPlan& plan, int h, int w) {
    for (const PatchBox& b : plan.boxes) {
        EXPECT_EQ(b.width(), plan.patch.width);
        EXPECT_EQ(b.height(), plan.patch.height);
        EXPECT_GE(b.x1, 0);
        EXPECT_GE(b.y1, 0);
        EXPECT_LE(b.x2, w);
        EXPECT_LE(b.y2, h);
    }
}

bool covered(const PatchPlan& plan, const Center& c) {
    return std::any_of(plan.boxes.begin(), plan.boxes.end(), [&](const PatchBox& b) { return b.contains(c.x, c.y); });
}

}  // namespace

TEST(Activation, ThresholdIsInclusive) {
    EXPECT_EQ(activation(Grid2D(4, 4, 0.49)).count(), 0u);
    const BitGrid act = activation(Grid2D(2, 3, 0.5));
    EXPECT_TRUE(act.all());
    EXPECT_THROW(activation(Grid2D(2, 2), 1.0), ParameterError);
}

TEST(Activation, MatchesElementwiseComparison) {
    std::mt19937_64 rng(40);
    const Grid2D m = oracle::random_grid(11, 13, rng);
    const BitGrid act = activation(m, 0.3);
    for (int y = 0; y < 11; ++y)
        for (int x = 0; x < 13; ++x) EXPECT_EQ(act.test(y, x), m(y, x) >= 0.3);
}

TEST(LocalMaxima, ZeroMaskAndSingleImpulse) {
    const Grid2D zero(9, 9);
    EXPECT_TRUE(local_maxima(zero, activation(zero)).empty());
    Grid2D m(9, 9);
    m(5, 5) = 0.9;
    const CenterSet c = local_maxima(m, activation(m));
    ASSERT_EQ(c.size(), 1u);
    EXPECT_EQ(c[0], (Center{5, 5, 0.9}));
}

TEST(LocalMaxima, PlateauKeepsFirstInRowMajorOrder) {
    Grid2D m(6, 6);
    m(2, 2) = m(2, 3) = m(3, 2) = m(3, 3) = 0.8;
    const CenterSet c = local_maxima(m, activation(m));
    ASSERT_EQ(c.size(), 1u);
    EXPECT_EQ(c[0].x, 2);
    EXPECT_EQ(c[0].y, 2);
}

TEST(LocalMaxima, TwoGaussiansAndRandomMasksMatchExhaustiveScan) {
    const std::vector<BoundingBox> two{{3.0, 4.0, 3.0, 3.0, 1}, {9.0, 6.0, 4.0, 2.0, 1}};
    const Grid2D m = gaussian_mask(two, 12, 14).grid;
    const CenterSet c = local_maxima(m, activation(m));
    EXPECT_EQ(c, (CenterSet{{3, 4, 1.0}, {9, 6, 1.0}}));

    std::mt19937_64 rng(41);
    for (int trial = 0; trial < 200; ++trial) {
        Grid2D r = trial % 2 ? blob_mask(15, 17, 4, rng) : oracle::random_grid(15, 17, rng);
        // Quantise so plateaus actually occur.
        if (trial % 4 == 0)
            for (double& v : r.values()) v = std::round(v * 4.0) / 4.0;
        ASSERT_EQ(local_maxima(r, activation(r)), oracle::local_maxima(r, 0.5)) << trial;
    }
}

TEST(EstimateSizes, WindowCounts) {
    BitGrid act(20, 20);
    act.set(3, 3);
    for (int y = 9; y <= 11; ++y)
        for (int x = 9; x <= 11; ++x) act.set(y, x);
    const SizeEstimates s = estimate_sizes(act, CenterSet{{3, 3, 1.0}, {10, 10, 1.0}});
    EXPECT_DOUBLE_EQ(s[0], 1.0 / 81.0);
    EXPECT_DOUBLE_EQ(s[1], 9.0 / 81.0);

    BitGrid full(20, 20);
    for (int y = 0; y < 20; ++y)
        for (int x = 0; x < 20; ++x) full.set(y, x);
    EXPECT_DOUBLE_EQ(estimate_sizes(full, CenterSet{{10, 10, 1.0}})[0], 1.0);
}

TEST(PatchSize, CeilingDivision) {
    EXPECT_EQ(patch_size_for(108, 192, 8), (PatchSize{24, 14}));
    EXPECT_EQ(patch_size_for(64, 64, 8), (PatchSize{8, 8}));
    EXPECT_EQ(patch_size_for(13, 7, 1), (PatchSize{7, 13}));
    EXPECT_THROW(patch_size_for(6, 64, 8), ParameterError);
    EXPECT_THROW(patch_size_for(6, 6, 0), ParameterError);
}

TEST(ClampBox, TranslatesIntoBounds) {
    EXPECT_EQ(clamp_box(PatchBox{-2, 5, 2, 9}, 8, 8), (PatchBox{0, 4, 4, 8}));
    EXPECT_EQ(box_centered_at(0, 0, PatchSize{4, 4}, 16, 16), (PatchBox{0, 0, 4, 4}));
    EXPECT_EQ(box_centered_at(8, 8, PatchSize{4, 4}, 16, 16), (PatchBox{6, 6, 10, 10}));
}

TEST(SliceUniform, KeepsCellsHoldingCentres) {
    const BitGrid act(16, 16);
    EXPECT_TRUE(slice_uniform(act, {}, 4).boxes.empty());
    const PatchPlan one = slice_uniform(act, CenterSet{{5, 9, 1.0}}, 4);
    EXPECT_EQ(one.boxes, (std::vector<PatchBox>{{4, 8, 8, 12}}));

    const CenterSet scattered{{1, 1, 1.0}, {2, 3, 1.0}, {13, 2, 1.0}, {9, 14, 1.0}};
    const PatchPlan three = slice_uniform(act, scattered, 4);
    EXPECT_EQ(three.boxes, (std::vector<PatchBox>{{0, 0, 4, 4}, {12, 0, 16, 4}, {8, 12, 12, 16}}));
    EXPECT_EQ(three.strategy, SliceStrategy::Uniform);
}

TEST(SliceUniform, RaggedLastCellIsTranslatedNotTruncated) {
    const PatchPlan p = slice_uniform(BitGrid(10, 10), CenterSet{{9, 9, 1.0}}, 3);
    EXPECT_EQ(p.patch, (PatchSize{4, 4}));
    EXPECT_EQ(p.boxes, (std::vector<PatchBox>{{6, 6, 10, 10}}));
}

TEST(AdjustPatch, HandTraces) {
    BitGrid act(8, 8);
    act.set(0, 0);
    act.set(2, 1);
    EXPECT_EQ(adjust_patch(PatchBox{0, 0, 4, 4}, act), (PatchBox{0, 0, 4, 4}));

    BitGrid margin(8, 8);
    margin.set(2, 2);
    margin.set(3, 3);
    const PatchBox moved = adjust_patch(PatchBox{0, 0, 4, 4}, margin);
    EXPECT_EQ(moved, (PatchBox{2, 2, 6, 6}));
    EXPECT_TRUE(moved.contains(2, 2));
    EXPECT_TRUE(moved.contains(3, 3));

    EXPECT_EQ(adjust_patch(PatchBox{4, 4, 8, 8}, margin), (PatchBox{4, 4, 8, 8}));
}

TEST(AdjustPatch, NeverEvictsEnclosedActivatedCells) {
    std::mt19937_64 rng(42);
    std::uniform_int_distribution<int> pos(0, 16);
    for (int trial = 0; trial < 500; ++trial) {
        const Grid2D m = oracle::random_grid(20, 20, rng);
        const BitGrid act = activation(m, 0.8);
        const PatchBox box{pos(rng), pos(rng), 0, 0};
        const PatchBox b{box.x1, box.y1, box.x1 + 4, box.y1 + 4};
        const PatchBox a = adjust_patch(b, act);
        EXPECT_EQ(a.width(), 4);
        EXPECT_EQ(a.height(), 4);
        for (const auto& [x, y] : activated_cells(act, b)) ASSERT_TRUE(a.contains(x, y));
    }
}

TEST(SliceGreedy, HandTraces) {
    EXPECT_TRUE(slice_greedy(Grid2D(16, 16), 4).boxes.empty());

    Grid2D one(16, 16);
    one(6, 6) = 0.9;
    one(6, 7) = one(7, 6) = one(7, 7) = 0.8;
    EXPECT_EQ(slice_greedy(one, 4).boxes, (std::vector<PatchBox>{{6, 6, 10, 10}}));

    // The 2x2 blob has the larger window count and is emitted first.
    Grid2D two(16, 16);
    two(2, 2) = 0.9;
    two(12, 12) = 0.9;
    two(12, 13) = two(13, 12) = two(13, 13) = 0.8;
    const PatchPlan p = slice_greedy(two, 4);
    EXPECT_EQ(p.boxes, (std::vector<PatchBox>{{12, 12, 16, 16}, {2, 2, 6, 6}}));
    EXPECT_EQ(p.strategy, SliceStrategy::Greedy);
    EXPECT_EQ(p.patch, (PatchSize{4, 4}));
}

TEST(SliceParallel, HandTraces) {
    EXPECT_TRUE(slice_parallel(Grid2D(16, 16), 4).boxes.empty());

    // Both candidates shift to column 7 and clamp back to the same box.
    Grid2D dup(10, 10);
    dup(1, 7) = 0.9;
    dup(1, 9) = 0.9;
    EXPECT_EQ(slice_parallel(dup, 3).boxes, (std::vector<PatchBox>{{6, 1, 10, 5}}));

    Grid2D iso(16, 16);
    iso(5, 5) = 0.9;
    iso(5, 6) = iso(6, 5) = iso(6, 6) = 0.7;
    EXPECT_EQ(slice_parallel(iso, 4).boxes, slice_greedy(iso, 4).boxes);
    EXPECT_EQ(slice_parallel(iso, 4).boxes, (std::vector<PatchBox>{{5, 5, 9, 9}}));
}

TEST(Slicing, CoverageAndShapeProperties) {
    std::mt19937_64 rng(43);
    for (int trial = 0; trial < 300; ++trial) {
        const int h = 8 + trial % 17;
        const int w = 8 + (trial * 7) % 23;
        const int k = 1 + trial % 6;
        const Grid2D m = blob_mask(h, w, 1 + trial % 7, rng);
        const BitGrid act = activation(m);
        const CenterSet centers = local_maxima(m, act);
        const PatchPlan g = slice_greedy(m, k);
        const PatchPlan p = slice_parallel(m, k);
        const PatchPlan u = slice_uniform(act, centers, k);
        expect_fixed_and_in_bounds(g, h, w);
        expect_fixed_and_in_bounds(p, h, w);
        expect_fixed_and_in_bounds(u, h, w);
        for (const Center& c : centers) {
            ASSERT_TRUE(covered(g, c)) << trial;
            ASSERT_TRUE(covered(p, c)) << trial;
            ASSERT_TRUE(covered(u, c)) << trial;
        }
        EXPECT_LE(p.boxes.size(), u.boxes.size());
        EXPECT_LE(g.boxes.size(), centers.size());
    }
}

TEST(SliceGreedy, NeverBeatsExhaustiveMinimumCover) {
    std::mt19937_64 rng(44);
    // Grids up to 12x12 whose ceiling patch size is exactly 4x4.
    const std::vector<std::pair<int, int>> dims_k{{7, 2}, {8, 2}, {10, 3}, {11, 3}, {12, 3}};
    for (int trial = 0; trial < 150; ++trial) {
        const auto [h, k] = dims_k[static_cast<std::size_t>(trial) % dims_k.size()];
        const int w = dims_k[static_cast<std::size_t>(trial / 5) % dims_k.size()].first;
        if ((w <= 8) != (h <= 8)) continue;
        const Grid2D m = blob_mask(h, w, 1 + trial % 4, rng);
        const PatchPlan g = slice_greedy(m, k);
        ASSERT_EQ(g.patch, (PatchSize{4, 4}));
        std::vector<std::pair<int, int>> pts;
        for (const Center& c : local_maxima(m, activation(m))) pts.emplace_back(c.x, c.y);
        EXPECT_GE(static_cast<int>(g.boxes.size()), oracle::min_cover(pts, h, w, 4, 4));
    }
}

TEST(SelectTokens, ActivatedCellsInRowMajorOrder) {
    EXPECT_TRUE(select_tokens(Grid2D(5, 5)).empty());
    Grid2D m(5, 5);
    m(0, 4) = m(1, 1) = m(2, 2) = m(4, 0) = m(4, 4) = 0.6;
    EXPECT_EQ(select_tokens(m), (TokenSet{{4, 0}, {1, 1}, {2, 2}, {0, 4}, {4, 4}}));

    std::mt19937_64 rng(45);
    const Grid2D r = oracle::random_grid(9, 7, rng);
    TokenSet expect;
    for (int y = 0; y < 9; ++y)
        for (int x = 0; x < 7; ++x)
            if (r(y, x) >= 0.5) expect.push_back(Token{x, y});
    EXPECT_EQ(select_tokens(r), expect);
}

TEST(ExtractPatches, CropsBoxedRegions) {
    std::mt19937_64 rng(46);
    const FeatureStack f = oracle::random_stack(3, 8, 10, rng);
    PatchPlan whole{SliceStrategy::Greedy, 1, {10, 8}, {{0, 0, 10, 8}}};
    const auto w = extract_patches(f, whole);
    ASSERT_EQ(w.size(), 1u);
    EXPECT_EQ(w[0], f);

    PatchPlan two{SliceStrategy::Greedy, 2, {5, 4}, {{0, 0, 5, 4}, {5, 4, 10, 8}}};
    const auto ps = extract_patches(f, two);
    ASSERT_EQ(ps.size(), 2u);
    for (std::size_t i = 0; i < 2; ++i) {
        const PatchBox& b = two.boxes[i];
        for (int c = 0; c < 3; ++c)
            for (int y = 0; y < 4; ++y)
                for (int x = 0; x < 5; ++x) EXPECT_EQ(ps[i](c, y, x), f(c, b.y1 + y, b.x1 + x));
    }

    EXPECT_TRUE(extract_patches(f, PatchPlan{}).empty());
    PatchPlan bad{SliceStrategy::Greedy, 2, {5, 4}, {{6, 0, 11, 4}}};
    EXPECT_THROW(extract_patches(f, bad), ShapeError);
}

TEST(PlanText, RoundTripAndErrors) {
    const PatchPlan p{SliceStrategy::Parallel, 8, {24, 14}, {{0, 0, 24, 14}, {100, 50, 124, 64}}};
    EXPECT_EQ(format_plan(p), "parallel 8 24 14\n0 0 24 14\n100 50 124 64\n");
    EXPECT_EQ(parse_plan(format_plan(p)), p);

    const auto path = std::filesystem::temp_directory_path() / "esod_plan.txt";
    write_plan(p, path);
    EXPECT_EQ(read_plan(path), p);
    std::filesystem::remove(path);

    EXPECT_THROW(parse_plan(""), ParseError);
    EXPECT_THROW(parse_plan("diagonal 8 2 2\n"), ParseError);
    try {
        parse_plan("greedy 8 2 2\n0 0 2 2\n1 1 3\n");
        FAIL() << "expected ParseError";
    } catch (const ParseError& e) {
        EXPECT_EQ(e.line(), 3u);
    }
    EXPECT_THROW(parse_plan("greedy 8 2 2\n0 0 2 2 9\n"), ParseError);
}

TEST(Strategy, NamesRoundTrip) {
    for (SliceStrategy s : {SliceStrategy::Uniform, SliceStrategy::Greedy, SliceStrategy::Parallel})
        EXPECT_EQ(parse_strategy(to_string(s)), s);
    EXPECT_THROW(parse_strategy("random"), ParameterError);
}
