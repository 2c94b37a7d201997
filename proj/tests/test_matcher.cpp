#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "fixtures.hpp"
#include "oracles.hpp"
#include "retina/error.hpp"
#include "retina/matcher.hpp"

using namespace retina;

namespace {

std::size_t nnz(const ClassVector& v) {
    return static_cast<std::size_t>(std::count_if(v.begin(), v.end(), [](double a) { return a != 0.0; }));
}

ClassVector shift_remap(const ClassVector& v, int delta) {
    ClassVector out{};
    for (int s = 0; s < kSlots; ++s) {
        const double a = v[static_cast<std::size_t>(s)];
        double r = a;
        if (a != 0.0) {
            r = a + delta;
            if (r > 360.0) r -= 360.0;
        }
        out[static_cast<std::size_t>((s + delta) % kSlots)] = r;
    }
    return out;
}

GalleryRecord record(std::string id, FeatureTemplate t) { return {std::move(id), t, "", OdCenter{}}; }

FeatureTemplate template_of(std::mt19937_64& rng, int n) { return encode(fixture::random_polar(rng, n)); }

}  // namespace

TEST_CASE("sim_profile basic cases") {
    ClassVector zero{};
    std::mt19937_64 rng(1);
    const auto v = fixture::random_vector(rng, 0.1);
    for (double s : sim_profile(zero, v).values) CHECK(s == 0.0);

    const auto self = sim_profile(v, v);
    CHECK(self.at_shift(360) == static_cast<double>(nnz(v)));

    ClassVector in{};
    ClassVector out{};
    in[4] = 10.0;   // tau = 5
    out[7] = 55.0;  // slot 8
    const auto p = sim_profile(in, out);
    for (int phi = 1; phi <= 360; ++phi) {
        if (phi == 3)
            CHECK(std::abs(p.at_shift(phi)) < 1e-15);
        else
            CHECK(p.at_shift(phi) == 0.0);
    }
    CHECK(p.at_shift(3) == std::cos(2.0 * (10.0 - 55.0) * std::numbers::pi / 180.0));

    const std::vector<double> short_vec(359, 1.0);
    CHECK_THROWS_AS(sim_profile(short_vec, v), Error);
}

TEST_CASE("sim_profile equals the dense double loop bit for bit") {
    std::mt19937_64 rng(2024);
    for (int trial = 0; trial < 300; ++trial) {
        const double d1 = 0.01 + 0.98 * (trial % 17) / 16.0;
        const double d2 = 0.01 + 0.98 * (trial % 13) / 12.0;
        const auto a = fixture::random_vector(rng, d1);
        const auto b = fixture::random_vector(rng, d2);
        const auto fast = sim_profile(a, b);
        const auto slow = oracle::sim_double_loop(a, b);
        for (int i = 0; i < kSlots; ++i) REQUIRE(fast.values[static_cast<std::size_t>(i)] == slow[static_cast<std::size_t>(i)]);
    }
}

TEST_CASE("si_class takes the maximum at the smallest shift") {
    SimilarityProfile zero;
    CHECK(si_class(zero).si == 0.0);
    CHECK(si_class(zero).best_shift == 1);

    SimilarityProfile one;
    one.values[11] = 7.5;
    CHECK(si_class(one).si == 7.5);
    CHECK(si_class(one).best_shift == 12);

    SimilarityProfile two;
    two.values[29] = 4.0;
    two.values[299] = 4.0;
    CHECK(si_class(two).best_shift == 30);

    SimilarityProfile neg;
    neg.values.fill(-1.0);
    neg.values[200] = -0.5;
    CHECK(si_class(neg).si == -0.5);
    CHECK(si_class(neg).best_shift == 201);
}

TEST_CASE("total_si of self match and empty query") {
    std::mt19937_64 rng(3);
    const auto t = template_of(rng, 20);
    const auto s = total_si(t, t, Weights{});
    const double expected = 1.0 * t.nonzero(0) + 2.0 * t.nonzero(1) + 4.0 * t.nonzero(2);
    CHECK(s.total == expected);
    for (int c = 0; c < kClasses; ++c) {
        CHECK(s.si[static_cast<std::size_t>(c)] == static_cast<double>(t.nonzero(c)));
        if (t.nonzero(c) > 0) CHECK(s.best_shift[static_cast<std::size_t>(c)] == 360);
    }
    CHECK(total_si(t, FeatureTemplate{}, Weights{}).total == 0.0);
    CHECK(s.total == Weights{}.w1 * s.si[0] + Weights{}.w2 * s.si[1] + Weights{}.w3 * s.si[2]);
}

TEST_CASE("noiseless 10 degree rotation scores m cos(20 deg) at shift 10") {
    std::mt19937_64 rng(10);
    for (int trial = 0; trial < 20; ++trial) {
        auto pcs = fixture::random_polar(rng, 12);
        const auto enrolled = encode(pcs);
        for (auto& p : pcs) p.orientation = wrap_degrees(p.orientation + 10);
        const auto query = encode(pcs);
        const auto s = total_si(enrolled, query, Weights{});
        for (int c = 0; c < kClasses; ++c) {
            const auto m = static_cast<double>(enrolled.nonzero(c));
            if (m == 0) continue;
            CHECK(std::abs(s.si[static_cast<std::size_t>(c)] - m * std::cos(20.0 * std::numbers::pi / 180.0)) <= 1e-9);
            CHECK(s.best_shift[static_cast<std::size_t>(c)] == 10);
        }
    }
}

TEST_CASE("shift equivariance of the argmax") {
    std::mt19937_64 rng(44);
    for (int trial = 0; trial < 30; ++trial) {
        const auto v = template_of(rng, 8)[trial % 3];
        if (nnz(v) == 0) continue;
        for (int delta = 1; delta <= 10; ++delta) {
            const auto idx = si_class(sim_profile(v, shift_remap(v, delta)));
            CHECK(idx.best_shift == delta);
            CHECK(std::abs(idx.si - nnz(v) * std::cos(2.0 * delta * std::numbers::pi / 180.0)) <= 1e-9);
        }
    }
}

TEST_CASE("bounds and self-maximality") {
    std::mt19937_64 rng(9);
    for (int trial = 0; trial < 200; ++trial) {
        const auto a = fixture::random_vector(rng, 0.02 + 0.3 * (trial % 5) / 4.0);
        const auto b = fixture::random_vector(rng, 0.02 + 0.3 * (trial % 7) / 6.0);
        const auto idx = si_class(sim_profile(a, b));
        CHECK(idx.si <= static_cast<double>(std::min(nnz(a), nnz(b))) + 1e-12);
        // Fewer overlap pairs than shifts leaves some shift at exactly 0.
        if (nnz(a) * nnz(b) < 360) CHECK(idx.si >= 0.0);
        const auto self = si_class(sim_profile(a, a));
        CHECK(self.si == static_cast<double>(nnz(a)));
        if (nnz(a) > 0) CHECK(self.best_shift <= 360);
        CHECK(sim_profile(a, a).at_shift(360) == static_cast<double>(nnz(a)));
    }
}

TEST_CASE("raising a weight never lowers the total when that index is nonnegative") {
    std::mt19937_64 rng(17);
    for (int trial = 0; trial < 100; ++trial) {
        const auto a = template_of(rng, 15);
        const auto b = template_of(rng, 15);
        const auto base = total_si(a, b, Weights{});
        for (int c = 0; c < kClasses; ++c) {
            if (base.si[static_cast<std::size_t>(c)] < 0.0) continue;
            Weights w;
            (c == 0 ? w.w1 : c == 1 ? w.w2 : w.w3) += 1.5;
            CHECK(total_si(a, b, w).total >= base.total);
        }
    }
}

TEST_CASE("identify ranks self first and breaks ties by id") {
    std::mt19937_64 rng(31);
    std::vector<GalleryRecord> gallery;
    for (int i = 0; i < 12; ++i) gallery.push_back(record("s" + std::to_string(10 + i), template_of(rng, 20)));
    const auto ranked = identify(gallery[5].feature, gallery, Weights{});
    REQUIRE(ranked.size() == 12);
    CHECK(ranked[0].subject_id == "s15");
    CHECK(ranked[0].score.total == total_si(gallery[5].feature, gallery[5].feature, Weights{}).total);
    for (std::size_t i = 1; i < ranked.size(); ++i) CHECK(ranked[i - 1].score.total >= ranked[i].score.total);

    // Every record empty in the query's populated rings: all totals 0.
    FeatureTemplate ring1;
    ring1[0][100] = 100.5;
    FeatureTemplate ring3;
    ring3[2][7] = 7.25;
    std::vector<GalleryRecord> disjoint{record("c", ring3), record("a", ring3), record("b", ring3)};
    const auto zeros = identify(ring1, disjoint, Weights{});
    CHECK(zeros[0].subject_id == "a");
    CHECK(zeros[1].subject_id == "b");
    CHECK(zeros[2].subject_id == "c");
    for (const auto& c : zeros) CHECK(c.score.total == 0.0);

    CHECK_THROWS_AS(identify(ring1, std::vector<GalleryRecord>{}, Weights{}), EmptyGalleryError);
}

TEST_CASE("identify output does not depend on thread count") {
    std::mt19937_64 rng(32);
    std::vector<GalleryRecord> gallery;
    for (int i = 0; i < 40; ++i) gallery.push_back(record("id" + std::to_string(i), template_of(rng, 18)));
    const auto query = template_of(rng, 18);
    const auto serial = identify(query, gallery, Weights{}, 1);
    for (unsigned threads : {2u, 3u, 8u, 64u}) {
        const auto par = identify(query, gallery, Weights{}, threads);
        REQUIRE(par.size() == serial.size());
        for (std::size_t i = 0; i < par.size(); ++i) {
            CHECK(par[i].subject_id == serial[i].subject_id);
            CHECK(par[i].score.total == serial[i].score.total);
            CHECK(par[i].score.best_shift == serial[i].score.best_shift);
        }
    }
}

TEST_CASE("verify thresholds with >=") {
    std::mt19937_64 rng(33);
    const auto t = template_of(rng, 20);
    const auto rec = record("s01", t);
    const double self = total_si(t, t, Weights{}).total;
    CHECK(verify(t, rec, self, Weights{}).decision == Decision::accept);
    CHECK(verify(t, rec, self + 1e-9, Weights{}).decision == Decision::reject);
    CHECK(verify(FeatureTemplate{}, rec, 0.5, Weights{}).decision == Decision::reject);
    CHECK(verify(FeatureTemplate{}, rec, 0.0, Weights{}).decision == Decision::accept);
    CHECK_THROWS_AS(verify(t, rec, -1.0, Weights{}), Error);
}
