#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "mgml/anchors.hpp"

using namespace mgml;

namespace {

// Independent brute-force oracle, transliterated directly from the
// region-proposal algorithm: seven fixed windows (four corners, center,
// middle-row band, middle-column band) and the (k+1)^2 sliding grid with
// strides s_H = h(1-sigma)/k, s_W = w(1-sigma)/k. All fractional
// coordinates floor. Kept deliberately separate from the library code.
struct Box {
    int x1, y1, x2, y2;
    bool operator==(const Box&) const = default;
};

std::vector<Box> oracle_seven(int h, int w, double sigma) {
    auto f = [](double v) { return static_cast<int>(std::floor(v)); };
    std::vector<Box> out;
    out.push_back({0, 0, f(w * sigma), f(h * sigma)});
    out.push_back({0, f(h * (1.0 - sigma)), f(w * sigma), h});
    out.push_back({f(w * (1.0 - sigma)), 0, w, f(h * sigma)});
    out.push_back({f(w * (1.0 - sigma)), f(h * (1.0 - sigma)), w, h});
    out.push_back({f(w * (1.0 - sigma) / 2.0), f(h * (1.0 - sigma) / 2.0),
                   f(w * (1.0 + sigma) / 2.0), f(h * (1.0 + sigma) / 2.0)});
    out.push_back({0, f(h * (1.0 - sigma) / 2.0), w, f(h * (1.0 + sigma) / 2.0)});
    out.push_back({f(w * (1.0 - sigma) / 2.0), 0, f(w * (1.0 + sigma) / 2.0), h});
    return out;
}

std::vector<Box> oracle_grid(int h, int w, double sigma, int k) {
    auto f = [](double v) { return static_cast<int>(std::floor(v)); };
    const double sh = h * (1.0 - sigma) / k;
    const double sw = w * (1.0 - sigma) / k;
    std::vector<Box> out;
    for (int m = 0; m <= k; ++m) {
        for (int n = 0; n <= k; ++n) {
            out.push_back({f(m * sw), f(n * sh),
                           f(m * sw + w * sigma), f(n * sh + h * sigma)});
        }
    }
    return out;
}

bool matches(const AnchorList& got, const std::vector<Box>& want) {
    if (got.size() != want.size()) return false;
    for (std::size_t i = 0; i < got.size(); ++i) {
        if (Box{got[i].x1, got[i].y1, got[i].x2, got[i].y2} != want[i]) return false;
    }
    return true;
}

} // namespace

TEST_CASE("seven-crop spec example h=w=8 sigma=0.5") {
    const AnchorList a = propose_seven(8, 8, 0.5);
    const std::vector<Box> want = {{0, 0, 4, 4}, {0, 4, 4, 8}, {4, 0, 8, 4},
                                   {4, 4, 8, 8}, {2, 2, 6, 6}, {0, 2, 8, 6},
                                   {2, 0, 6, 8}};
    CHECK(matches(a, want));
}

TEST_CASE("seven-crop h=w=4 sigma=0.5: quadrants plus center (1,1,3,3)") {
    const AnchorList a = propose_seven(4, 4, 0.5);
    CHECK(Box{a[0].x1, a[0].y1, a[0].x2, a[0].y2} == Box{0, 0, 2, 2});
    CHECK(Box{a[1].x1, a[1].y1, a[1].x2, a[1].y2} == Box{0, 2, 2, 4});
    CHECK(Box{a[2].x1, a[2].y1, a[2].x2, a[2].y2} == Box{2, 0, 4, 2});
    CHECK(Box{a[3].x1, a[3].y1, a[3].x2, a[3].y2} == Box{2, 2, 4, 4});
    CHECK(Box{a[4].x1, a[4].y1, a[4].x2, a[4].y2} == Box{1, 1, 3, 3});
}

TEST_CASE("center anchor is 90-degree-rotation symmetric for square frames") {
    for (int s : {4, 8, 10, 17, 33, 64}) {
        const Anchor c = propose_seven(s, s, 0.5)[4];
        // symmetric window: rotating the frame by 90 degrees maps the
        // window onto itself, i.e. x-extent equals y-extent and the
        // margins mirror.
        CHECK(c.x1 == c.y1);
        CHECK(c.x2 == c.y2);
        CHECK((c.x1 + c.x2 == s || c.x1 + c.x2 == s - 1));
    }
}

TEST_CASE("grid spec examples") {
    const AnchorList nine = propose_grid(8, 8, 0.5, 2);
    REQUIRE(nine.size() == 9);
    int idx = 0;
    for (int m : {0, 2, 4}) {
        for (int n : {0, 2, 4}) {
            CHECK(nine[idx].x1 == m);
            CHECK(nine[idx].y1 == n);
            CHECK(nine[idx].x2 == m + 4);
            CHECK(nine[idx].y2 == n + 4);
            ++idx;
        }
    }

    const AnchorList four = propose_grid(8, 8, 0.5, 1);
    REQUIRE(four.size() == 4);
    CHECK(matches(four, {{0, 0, 4, 4}, {0, 4, 4, 8}, {4, 0, 8, 4}, {4, 4, 8, 8}}));

    for (double sigma : {0.3, 0.5, 0.7}) {
        const AnchorList g = propose_grid(10, 12, sigma, 1);
        CHECK(g[0].x1 == 0);
        CHECK(g[0].y1 == 0);
        CHECK(g[0].x2 == static_cast<int>(std::floor(12 * sigma)));
        CHECK(g[0].y2 == static_cast<int>(std::floor(10 * sigma)));
    }
}

TEST_CASE("oracle equivalence over the full acceptance range") {
    for (int h = 4; h <= 64; ++h) {
        for (int w = 4; w <= 64; ++w) {
            for (double sigma : {0.3, 0.5, 0.7}) {
                if (static_cast<int>(std::floor(w * sigma)) < 1 ||
                    static_cast<int>(std::floor(h * sigma)) < 1)
                    continue;
                CHECK(matches(propose_seven(h, w, sigma), oracle_seven(h, w, sigma)));
                for (int k : {1, 2, 3}) {
                    CHECK(matches(propose_grid(h, w, sigma, k),
                                  oracle_grid(h, w, sigma, k)));
                }
            }
        }
    }
}

TEST_CASE("anchors stay in bounds with positive area") {
    for (int h : {4, 5, 9, 31, 64}) {
        for (int w : {4, 7, 16, 33}) {
            for (double sigma : {0.3, 0.5, 0.7}) {
                if (std::floor(h * sigma) < 1 || std::floor(w * sigma) < 1) continue;
                AnchorList all = propose_seven(h, w, sigma);
                AnchorList g = propose_grid(h, w, sigma, 3);
                all.insert(all.end(), g.begin(), g.end());
                for (const Anchor& a : all) {
                    CHECK(a.x1 >= 0);
                    CHECK(a.y1 >= 0);
                    CHECK(a.x1 < a.x2);
                    CHECK(a.y1 < a.y2);
                    CHECK(a.x2 <= w);
                    CHECK(a.y2 <= h);
                }
            }
        }
    }
}

TEST_CASE("seven-crop corners tile the frame at sigma = 0.5") {
    for (int s : {4, 8, 16, 64}) {
        const AnchorList a = propose_seven(s, s, 0.5);
        std::vector<int> hits(static_cast<std::size_t>(s) * s, 0);
        for (int j = 0; j < 4; ++j) {
            for (int y = a[j].y1; y < a[j].y2; ++y)
                for (int x = a[j].x1; x < a[j].x2; ++x)
                    hits[static_cast<std::size_t>(y) * s + x] += 1;
        }
        for (int v : hits) CHECK(v == 1);
    }
}

TEST_CASE("grid last anchor bottom-right stays inside the frame") {
    for (int h : {6, 8, 13, 64}) {
        for (int k : {1, 2, 3}) {
            const AnchorList g = propose_grid(h, h, 0.5, k);
            CHECK(g.back().x2 <= h);
            CHECK(g.back().y2 <= h);
        }
    }
}

TEST_CASE("degenerate windows raise config errors with guidance") {
    CHECK_THROWS_AS(propose_seven(1, 8, 0.5), ConfigError);
    CHECK_THROWS_AS(propose_grid(8, 1, 0.4, 2), ConfigError);
    CHECK_THROWS_AS(propose_seven(8, 8, 0.0), ConfigError);
    CHECK_THROWS_AS(propose_seven(8, 8, 1.0), ConfigError);
    CHECK_THROWS_AS(propose_grid(8, 8, 0.5, 0), ConfigError);
    try {
        propose_seven(1, 8, 0.5);
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find("sigma") != std::string::npos);
    }
}

TEST_CASE("anchor lists are pure functions of their inputs") {
    const AnchorList a = propose_seven(33, 47, 0.7);
    const AnchorList b = propose_seven(33, 47, 0.7);
    CHECK(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].x1 == b[i].x1);
        CHECK(a[i].y1 == b[i].y1);
        CHECK(a[i].x2 == b[i].x2);
        CHECK(a[i].y2 == b[i].y2);
    }
}
