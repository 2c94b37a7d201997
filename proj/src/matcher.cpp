#include "retina/matcher.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <thread>

#include "retina/error.hpp"

namespace retina {

void Weights::validate() const {
    if (!(w1 >= 0.0 && w2 >= 0.0 && w3 >= 0.0)) throw Error("weights must be >= 0");
}

SimilarityProfile sim_profile(std::span<const double> enrolled, std::span<const double> query) {
    if (enrolled.size() != kSlots || query.size() != kSlots)
        throw Error("sim_profile: vectors must have 360 slots");

    // Only slot pairs with both amplitudes positive contribute. Enumerating
    // them tau-major accumulates each Sim(phi) in ascending tau, the same order
    // as the dense double loop, so results agree bit for bit.
    std::vector<int> query_slots;
    query_slots.reserve(kSlots);
    for (int j = 0; j < kSlots; ++j)
        if (query[static_cast<std::size_t>(j)] > 0.0) query_slots.push_back(j);

    SimilarityProfile p;
    for (int tau = 0; tau < kSlots; ++tau) {
        const double a = enrolled[static_cast<std::size_t>(tau)];
        if (!(a > 0.0)) continue;
        for (int j : query_slots) {
            const double b = query[static_cast<std::size_t>(j)];
            if (!(a * b > 0.0)) continue;
            // phi in 1..360 with out[tau + phi] == query[j]; phi = 360 when j == tau.
            int phi = (j - tau + kSlots) % kSlots;
            if (phi == 0) phi = kSlots;
            p.values[static_cast<std::size_t>(phi - 1)] += std::cos(2.0 * (a - b) * std::numbers::pi / 180.0);
        }
    }
    return p;
}

ClassIndex si_class(const SimilarityProfile& profile) {
    ClassIndex best{profile.values[0], 1};
    for (int phi = 2; phi <= kSlots; ++phi) {
        const double v = profile.at_shift(phi);
        if (v > best.si) best = {v, phi};
    }
    return best;
}

MatchScore total_si(const FeatureTemplate& enrolled, const FeatureTemplate& query, const Weights& w) {
    MatchScore s;
    for (int c = 0; c < kClasses; ++c) {
        const auto idx = si_class(sim_profile(enrolled[c], query[c]));
        s.si[static_cast<std::size_t>(c)] = idx.si;
        s.best_shift[static_cast<std::size_t>(c)] = idx.best_shift;
    }
    s.total = w.w1 * s.si[0] + w.w2 * s.si[1] + w.w3 * s.si[2];
    return s;
}

std::vector<Candidate> identify(const FeatureTemplate& query, std::span<const GalleryRecord> gallery,
                                const Weights& w, unsigned threads) {
    if (gallery.empty()) throw EmptyGalleryError();
    w.validate();

    std::vector<Candidate> out(gallery.size());
    auto score_range = [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) out[i] = {gallery[i].subject_id, total_si(gallery[i].feature, query, w)};
    };

    const std::size_t workers = std::clamp<std::size_t>(threads, 1, gallery.size());
    if (workers == 1) {
        score_range(0, gallery.size());
    } else {
        std::vector<std::jthread> pool;
        const std::size_t chunk = (gallery.size() + workers - 1) / workers;
        for (std::size_t begin = 0; begin < gallery.size(); begin += chunk)
            pool.emplace_back(score_range, begin, std::min(gallery.size(), begin + chunk));
    }

    std::sort(out.begin(), out.end(), [](const Candidate& p, const Candidate& q) {
        if (p.score.total != q.score.total) return p.score.total > q.score.total;
        return p.subject_id < q.subject_id;
    });
    return out;
}

Verification verify(const FeatureTemplate& query, const GalleryRecord& enrolled, double threshold, const Weights& w) {
    if (!(threshold >= 0.0)) throw Error("verify: threshold must be >= 0");
    w.validate();
    Verification v;
    v.score = total_si(enrolled.feature, query, w);
    v.decision = v.score.total >= threshold ? Decision::accept : Decision::reject;
    return v;
}

}  // namespace retina
