#include "mdiqkd/protocol_sim.hpp"

#include <algorithm>
#include <atomic>
#include <bit>
#include <cmath>
#include <deque>
#include <numbers>
#include <ostream>
#include <stdexcept>
#include <thread>

namespace mdiqkd {

namespace {

constexpr int kMaxPhotons = 170;  // factorial fits in double

const std::array<double, kMaxPhotons + 1>& factorials() {
    static const std::array<double, kMaxPhotons + 1> table = [] {
        std::array<double, kMaxPhotons + 1> t{};
        t[0] = 1.0;
        for (int i = 1; i <= kMaxPhotons; ++i) t[i] = t[i - 1] * double(i);
        return t;
    }();
    return table;
}

double binomial_coeff(int n, int k) {
    const auto& f = factorials();
    return f[n] / (f[k] * f[n - k]);
}

// ||(v+)^p (w+)^q |0>||^2 / (p! q!) for the mode vectors restricted to the
// unblocked slots; this is the probability that all blocked slots are empty
double vacuum_probability(const std::array<double, 4>& a, const std::array<double, 4>& b,
                          int k_alice, int k_bob, unsigned blocked_mask) {
    double vv = 0.0, ww = 0.0, vw = 0.0;
    for (int i = 0; i < 4; ++i) {
        if (blocked_mask >> i & 1u) continue;
        vv += a[i] * a[i];
        ww += b[i] * b[i];
        vw += a[i] * b[i];
    }
    if (k_alice == 0 && k_bob == 0) return 1.0;
    if (k_alice == 0) return std::pow(ww, k_bob);
    if (k_bob == 0) return std::pow(vv, k_alice);
    if (vv == 0.0 || ww == 0.0) return 0.0;

    const double beta2 = vw * vw / vv;           // |<v_hat, w>|^2
    const double gamma2 = std::max(ww - beta2, 0.0);
    const auto& f = factorials();
    double sum = 0.0;
    for (int j = 0; j <= k_bob; ++j) {
        const double c = binomial_coeff(k_bob, j);
        sum += c * c * std::pow(beta2, j) * std::pow(gamma2, k_bob - j) * f[k_alice + j] *
               f[k_bob - j];
    }
    return std::pow(vv, k_alice) * sum / (f[k_alice] * f[k_bob]);
}

void output_mode_vectors(const PreparedQubit& alice, const PreparedQubit& bob, bool bob_flipped,
                         std::array<double, 4>& a, std::array<double, 4>& b) {
    const double s = std::numbers::sqrt2 / 2.0;
    const double be = bob.amp_early;
    const double bl = bob_flipped ? -bob.amp_late : bob.amp_late;
    // slots: D1 early, D1 late, D2 early, D2 late; Bob enters the other
    // beamsplitter port, hence the sign flip on D2
    a = {alice.amp_early * s, alice.amp_late * s, alice.amp_early * s, alice.amp_late * s};
    b = {be * s, bl * s, -be * s, -bl * s};
}

}  // namespace

PreparedQubit prepare_qubit(RngStream& rng, const DecoyParams& decoy) {
    decoy.validate();
    PreparedQubit q;
    q.basis = rng.next_double() < decoy.p_z ? Basis::z : Basis::x;
    q.bit = rng.next_double() < 0.5 ? 0 : 1;
    const double u = rng.next_double();
    q.intensity_index = u < decoy.p_mu ? 0 : (u < decoy.p_mu + decoy.p_nu ? 1 : 2);
    q.intensity = decoy.intensity(q.intensity_index);
    q.phase = rng.next_double() * 2.0 * std::numbers::pi;
    if (q.basis == Basis::z) {
        q.amp_early = q.bit == 0 ? 1.0 : 0.0;
        q.amp_late = q.bit == 0 ? 0.0 : 1.0;
    } else {
        q.amp_early = std::numbers::sqrt2 / 2.0;
        q.amp_late = q.bit == 0 ? q.amp_early : -q.amp_early;
    }
    return q;
}

void TransmitParams::validate() const {
    if (trans_alice < 0.0 || trans_alice > 1.0 || trans_bob < 0.0 || trans_bob > 1.0)
        throw std::domain_error("TransmitParams: transmittance must lie in [0, 1]");
    if (raman_p < 0.0 || dark_p < 0.0 || raman_p + dark_p > 1.0)
        throw std::domain_error("TransmitParams: noise probabilities must lie in [0, 1]");
    if (misalignment < 0.0 || misalignment > 0.5)
        throw std::domain_error("TransmitParams: misalignment must lie in [0, 0.5]");
    if (jitter_migration_p < 0.0 || jitter_migration_p > 1.0)
        throw std::domain_error("TransmitParams: migration probability must lie in [0, 1]");
}

std::vector<DetectionEvent> CycleOutcome::events(std::uint64_t cycle_index) const {
    std::vector<DetectionEvent> out;
    for (int i = 0; i < kSlotCount; ++i)
        if (clicks >> i & 1u)
            out.push_back(DetectionEvent{i / 2, i % 2, cycle_index, origin[i]});
    return out;
}

std::array<double, 16> photon_presence_distribution(const PreparedQubit& alice,
                                                    const PreparedQubit& bob, int k_alice,
                                                    int k_bob, bool bob_flipped) {
    if (k_alice < 0 || k_bob < 0 || k_alice > kMaxPhotons || k_bob > kMaxPhotons)
        throw std::domain_error("photon_presence_distribution: photon number out of range");
    std::array<double, 16> p{};
    if (k_alice == 0 && k_bob == 0) {
        p[0] = 1.0;
        return p;
    }
    std::array<double, 4> a, b;
    output_mode_vectors(alice, bob, bob_flipped, a, b);

    std::array<double, 16> vac{};
    for (unsigned m = 0; m < 16; ++m) vac[m] = vacuum_probability(a, b, k_alice, k_bob, m);

    // Moebius inversion: P(occupied exactly S) from P(empty superset masks)
    double total = 0.0;
    for (unsigned s = 0; s < 16; ++s) {
        double acc = 0.0;
        unsigned sub = s;
        while (true) {
            const int sign = (std::popcount(s ^ sub) & 1) ? -1 : 1;
            acc += sign * vac[15u ^ sub];
            if (sub == 0) break;
            sub = (sub - 1) & s;
        }
        p[s] = std::max(acc, 0.0);
        total += p[s];
    }
    if (total > 0.0)
        for (double& v : p) v /= total;
    return p;
}

CycleOutcome detect_given_photons(const PreparedQubit& alice, const PreparedQubit& bob,
                                  int k_alice, int k_bob, const TransmitParams& p,
                                  RngStream& rng) {
    CycleOutcome out;
    out.origin.fill(Origin::signal);

    unsigned presence = 0;
    if (k_alice + k_bob > 0) {
        const bool flipped = p.misalignment > 0.0 && rng.bernoulli(p.misalignment);
        const auto dist = photon_presence_distribution(alice, bob, k_alice, k_bob, flipped);
        double u = rng.next_double();
        for (unsigned s = 0; s < 16; ++s) {
            u -= dist[s];
            if (u < 0.0) {
                presence = s;
                break;
            }
        }
    }
    out.clicks = presence;

    if (p.raman_p > 0.0 || p.dark_p > 0.0) {
        for (int i = 0; i < kSlotCount; ++i) {
            const double u = rng.next_double();
            Origin noise_origin;
            if (u < p.raman_p)
                noise_origin = Origin::raman;
            else if (u < p.raman_p + p.dark_p)
                noise_origin = Origin::dark;
            else
                continue;
            if (!(out.clicks >> i & 1u)) {
                out.clicks |= 1u << i;
                out.origin[i] = noise_origin;
            }
            // a slot that already holds a photon keeps the signal tag
        }
    }

    if (p.jitter_migration_p > 1e-15 && out.clicks != 0) {
        unsigned migrated = 0;
        std::array<Origin, kSlotCount> morigin = out.origin;
        for (int i = 0; i < kSlotCount; ++i) {
            if (!(out.clicks >> i & 1u)) continue;
            int slot = i;
            if (rng.bernoulli(p.jitter_migration_p)) slot = (i % 2 == 0) ? i + 1 : i - 1;
            if (!(migrated >> slot & 1u)) {
                migrated |= 1u << slot;
                morigin[slot] = out.origin[i];
            }
        }
        out.clicks = migrated;
        out.origin = morigin;
    }
    return out;
}

CycleOutcome transmit_and_detect(const PreparedQubit& alice, const PreparedQubit& bob,
                                 const TransmitParams& p, RngStream& rng) {
    p.validate();
    const int n_alice = rng.poisson(alice.intensity);
    const int n_bob = rng.poisson(bob.intensity);
    int k_alice = 0, k_bob = 0;
    for (int i = 0; i < n_alice; ++i) k_alice += rng.bernoulli(p.trans_alice) ? 1 : 0;
    for (int i = 0; i < n_bob; ++i) k_bob += rng.bernoulli(p.trans_bob) ? 1 : 0;
    CycleOutcome out = detect_given_photons(alice, bob, k_alice, k_bob, p, rng);
    out.n_alice = n_alice;
    out.n_bob = n_bob;
    return out;
}

BsmPattern classify_pattern(unsigned clicks) {
    if (clicks == kPsiMinusMaskA || clicks == kPsiMinusMaskB) return BsmPattern::psi_minus;
    if (clicks == kPsiPlusMaskA || clicks == kPsiPlusMaskB) return BsmPattern::psi_plus;
    return clicks == 0 ? BsmPattern::none : BsmPattern::other;
}

std::optional<BsmAnnouncement> bsm_decide(const CycleOutcome& outcome,
                                          std::uint64_t cycle_index) {
    if (classify_pattern(outcome.clicks) == BsmPattern::psi_minus)
        return BsmAnnouncement{cycle_index};
    return std::nullopt;
}

std::optional<BsmAnnouncement> bsm_decide(std::span<const DetectionEvent> events) {
    if (events.empty()) return std::nullopt;
    unsigned clicks = 0;
    const std::uint64_t cycle = events.front().cycle_index;
    for (const DetectionEvent& e : events) {
        if (e.cycle_index != cycle)
            throw std::logic_error("bsm_decide: events from multiple cycles");
        clicks |= 1u << (e.detector * 2 + e.window);
    }
    if (classify_pattern(clicks) == BsmPattern::psi_minus) return BsmAnnouncement{cycle};
    return std::nullopt;
}

SiftOutcome sift(std::span<const PreparationLogEntry> alice_log,
                 std::span<const PreparationLogEntry> bob_log,
                 std::span<const BsmAnnouncement> announcements, std::size_t buffer_depth,
                 std::size_t announce_delay_cycles) {
    if (alice_log.size() != bob_log.size())
        throw std::logic_error("sift: preparation logs differ in length");
    SiftOutcome out;

    // announcements ordered by arrival time at the senders
    std::vector<BsmAnnouncement> sorted(announcements.begin(), announcements.end());
    std::sort(sorted.begin(), sorted.end(),
              [](const auto& l, const auto& r) { return l.cycle_index < r.cycle_index; });

    std::deque<std::uint64_t> fifo;  // cycle indices currently buffered
    std::size_t next_ann = 0;
    const std::uint64_t n = alice_log.size();
    for (std::uint64_t now = 0; now < n + announce_delay_cycles; ++now) {
        if (now < n) {
            fifo.push_back(now);
            while (fifo.size() > buffer_depth) fifo.pop_front();
        }
        if (now < announce_delay_cycles) continue;
        const std::uint64_t announced_cycle = now - announce_delay_cycles;
        while (next_ann < sorted.size() && sorted[next_ann].cycle_index == announced_cycle) {
            const std::uint64_t c = sorted[next_ann].cycle_index;
            if (c >= n) throw std::logic_error("sift: announcement for a cycle never prepared");
            if (!fifo.empty() && fifo.front() <= c) {
                SiftedRecord rec;
                rec.cycle_index = c;
                rec.alice = alice_log[c];
                rec.bob = bob_log[c];
                rec.flip_applied = true;  // anticorrelation convention
                out.records.push_back(rec);
            } else {
                ++out.dropped;
            }
            ++next_ann;
        }
    }
    if (next_ann < sorted.size())
        throw std::logic_error("sift: announcement for a cycle never prepared");
    return out;
}

double TallyCell::gain_stderr() const {
    if (pairs == 0) return 0.0;
    const double q = gain();
    return std::sqrt(std::max(q * (1.0 - q), 0.0) / double(pairs));
}

double TallyCell::error_stderr() const {
    if (announced == 0) return 0.0;
    const double e = error_rate();
    return std::sqrt(std::max(e * (1.0 - e), 0.0) / double(announced));
}

void CampaignResult::merge(const CampaignResult& other) {
    cycles += other.cycles;
    for (int b = 0; b < 2; ++b) {
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) {
                cell[b][i][j].pairs += other.cell[b][i][j].pairs;
                cell[b][i][j].announced += other.cell[b][i][j].announced;
                cell[b][i][j].errors += other.cell[b][i][j].errors;
            }
        tagged11[b].pairs += other.tagged11[b].pairs;
        tagged11[b].announced += other.tagged11[b].announced;
        tagged11[b].errors += other.tagged11[b].errors;
    }
    psi_plus += other.psi_plus;
    dropped_announcements += other.dropped_announcements;
    for (int i = 0; i < 3; ++i) clicks_by_origin[i] += other.clicks_by_origin[i];
}

GainErrorSet CampaignResult::to_gain_error_set() const {
    GainErrorSet g;
    for (int b = 0; b < 2; ++b)
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j)
                g.at(b == 0 ? Basis::z : Basis::x, i, j) =
                    GainError{cell[b][i][j].gain(), cell[b][i][j].error_rate()};
    return g;
}

namespace {

struct DeadTimeState {
    std::array<double, 2> last_click_ns = {-1e300, -1e300};
};

void run_chunk(const CampaignScenario& sc, const TransmitParams& tp, std::uint64_t begin,
               std::uint64_t end, std::uint64_t seed, CampaignResult& out) {
    RngStream rng(seed);
    const bool flip_drops = sc.announce_delay_cycles > sc.buffer_depth;
    const double cycle_ns = 1e9 / sc.clock_hz;
    const bool use_dead_time = sc.detector.dead_time_ns > 0.0;
    DeadTimeState dead;

    for (std::uint64_t c = begin; c < end; ++c) {
        rng.set_cycle(c);
        const PreparedQubit alice = prepare_qubit(rng, sc.decoy);
        const PreparedQubit bob = prepare_qubit(rng, sc.decoy);
        CycleOutcome outcome = transmit_and_detect(alice, bob, tp, rng);

        if (use_dead_time && outcome.clicks != 0) {
            // a clicked detector is insensitive for dead_time_ns; slots in
            // time order within the cycle (early before late)
            for (int w = 0; w < 2; ++w) {
                for (int d = 0; d < 2; ++d) {
                    const int slot = d * 2 + w;
                    if (!(outcome.clicks >> slot & 1u)) continue;
                    const double t = double(c) * cycle_ns + w * 2.5;
                    if (t - dead.last_click_ns[d] < sc.detector.dead_time_ns)
                        outcome.clicks &= ~(1u << slot);
                    else
                        dead.last_click_ns[d] = t;
                }
            }
        }

        for (int i = 0; i < kSlotCount; ++i)
            if (outcome.clicks >> i & 1u)
                ++out.clicks_by_origin[int(outcome.origin[i])];

        const BsmPattern pattern = classify_pattern(outcome.clicks);
        if (pattern == BsmPattern::psi_plus) ++out.psi_plus;
        const bool announced = pattern == BsmPattern::psi_minus;
        if (announced && flip_drops) ++out.dropped_announcements;

        if (alice.basis == bob.basis) {
            const int b = int(alice.basis);
            TallyCell& cell = out.cell[b][alice.intensity_index][bob.intensity_index];
            ++cell.pairs;
            const bool tagged = outcome.n_alice == 1 && outcome.n_bob == 1;
            if (tagged) ++out.tagged11[b].pairs;
            if (announced) {
                ++cell.announced;
                const bool error = alice.bit == bob.bit;
                if (error) ++cell.errors;
                if (tagged) {
                    ++out.tagged11[b].announced;
                    if (error) ++out.tagged11[b].errors;
                }
            }
        }
    }
    out.cycles = end - begin;
}

}  // namespace

void dump_cycle_trace(const CampaignScenario& sc, std::uint64_t seed, std::uint64_t first_cycle,
                      std::uint64_t max_cycles, std::ostream& out) {
    constexpr std::uint64_t kTraceCap = 1'000'000;
    max_cycles = std::min(max_cycles, kTraceCap);
    TransmitParams tp;
    tp.trans_alice = std::pow(10.0, -sc.loss_alice_db / 10.0) * sc.detector.efficiency;
    tp.trans_bob = std::pow(10.0, -sc.loss_bob_db / 10.0) * sc.detector.efficiency;
    tp.raman_p = sc.raman_p;
    tp.dark_p = sc.dark_p;
    tp.misalignment = sc.decoy.misalignment;
    tp.jitter_migration_p = sc.detector.window_migration_prob();
    tp.validate();

    RngStream rng(seed);
    const char* patterns[] = {"none", "psi-", "psi+", "other"};
    for (std::uint64_t c = first_cycle; c < first_cycle + max_cycles; ++c) {
        rng.set_cycle(c);
        const PreparedQubit alice = prepare_qubit(rng, sc.decoy);
        const PreparedQubit bob = prepare_qubit(rng, sc.decoy);
        const CycleOutcome o = transmit_and_detect(alice, bob, tp, rng);
        out << c << ' ' << (alice.basis == Basis::z ? 'Z' : 'X') << alice.bit << ' '
            << alice.intensity_index << ' ' << (bob.basis == Basis::z ? 'Z' : 'X') << bob.bit
            << ' ' << bob.intensity_index << ' ' << o.n_alice << ' ' << o.n_bob << ' ';
        for (int i = 0; i < kSlotCount; ++i) out << ((o.clicks >> i) & 1u);
        out << ' ' << patterns[int(classify_pattern(o.clicks))] << '\n';
    }
}

CampaignResult run_campaign(const CampaignScenario& sc, std::uint64_t cycles,
                            std::uint64_t seed, int workers) {
    if (cycles == 0) throw std::domain_error("run_campaign: cycles must be >= 1");
    sc.decoy.validate();
    sc.detector.validate();

    TransmitParams tp;
    tp.trans_alice = std::pow(10.0, -sc.loss_alice_db / 10.0) * sc.detector.efficiency;
    tp.trans_bob = std::pow(10.0, -sc.loss_bob_db / 10.0) * sc.detector.efficiency;
    tp.raman_p = sc.raman_p;
    tp.dark_p = sc.dark_p;
    tp.misalignment = sc.decoy.misalignment;
    tp.jitter_migration_p = sc.detector.window_migration_prob();
    tp.validate();

    if (workers <= 0) workers = int(std::thread::hardware_concurrency());
    if (workers < 1) workers = 1;

    // fixed chunk boundaries keep results identical for any worker count
    constexpr std::uint64_t kChunk = 1u << 22;
    const std::uint64_t n_chunks = (cycles + kChunk - 1) / kChunk;
    std::vector<CampaignResult> partial(n_chunks);
    std::atomic<std::uint64_t> next{0};

    auto worker_fn = [&] {
        for (;;) {
            const std::uint64_t i = next.fetch_add(1);
            if (i >= n_chunks) return;
            const std::uint64_t begin = i * kChunk;
            const std::uint64_t end = std::min(begin + kChunk, cycles);
            run_chunk(sc, tp, begin, end, seed, partial[i]);
        }
    };

    if (workers == 1 || n_chunks == 1) {
        worker_fn();
    } else {
        std::vector<std::thread> pool;
        for (int w = 0; w < workers; ++w) pool.emplace_back(worker_fn);
        for (auto& t : pool) t.join();
    }

    CampaignResult total;
    for (const CampaignResult& p : partial) total.merge(p);
    return total;
}

}  // namespace mdiqkd
