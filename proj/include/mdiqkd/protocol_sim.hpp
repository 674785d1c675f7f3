#pragma once

#include "mdiqkd/keyrate_engine.hpp"
#include "mdiqkd/rng.hpp"

#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

namespace mdiqkd {

struct PreparedQubit {
    Basis basis = Basis::z;
    int bit = 0;
    int intensity_index = 0;
    double intensity = 0.0;  // mean photon number of the emitted pulse
    double phase = 0.0;      // randomized global phase (not consumed by the
                             // photon-number sampling, which is already
                             // phase-averaged)
    // unit qubit-mode amplitudes on the early/late temporal modes
    double amp_early = 1.0;
    double amp_late = 0.0;
};

PreparedQubit prepare_qubit(RngStream& rng, const DecoyParams& decoy);

enum class Origin { signal = 0, raman = 1, dark = 2 };

// detector/window slot order: D1 early, D1 late, D2 early, D2 late
inline constexpr int kSlotCount = 4;
inline constexpr unsigned kPsiMinusMaskA = 0b1001;  // D1 early + D2 late
inline constexpr unsigned kPsiMinusMaskB = 0b0110;  // D1 late + D2 early
inline constexpr unsigned kPsiPlusMaskA = 0b0011;   // both windows on D1
inline constexpr unsigned kPsiPlusMaskB = 0b1100;   // both windows on D2

struct DetectionEvent {
    int detector = 0;  // 0 = D1, 1 = D2
    int window = 0;    // 0 = early, 1 = late
    std::uint64_t cycle_index = 0;
    Origin origin = Origin::signal;
};

struct BsmAnnouncement {
    std::uint64_t cycle_index = 0;
};

struct TransmitParams {
    double trans_alice = 1.0;  // end-to-end transmittance incl. detector efficiency
    double trans_bob = 1.0;
    double raman_p = 0.0;  // per detector per window
    double dark_p = 0.0;
    double misalignment = 0.0;  // probability of a flipped interference outcome
    double jitter_migration_p = 0.0;

    void validate() const;
    double noise_p() const { return raman_p + dark_p; }
};

struct CycleOutcome {
    unsigned clicks = 0;  // bitmask over slots
    std::array<Origin, kSlotCount> origin{};
    int n_alice = 0;  // emitted photon numbers
    int n_bob = 0;

    std::vector<DetectionEvent> events(std::uint64_t cycle_index) const;
};

/// Exact joint distribution of which output modes hold at least one photon,
/// for k_alice photons in Alice's qubit mode and k_bob in Bob's after the
/// 50/50 beamsplitter. Correct for any photon numbers, including
/// Hong-Ou-Mandel bunching of indistinguishable pairs.
std::array<double, 16> photon_presence_distribution(const PreparedQubit& alice,
                                                    const PreparedQubit& bob, int k_alice,
                                                    int k_bob, bool bob_flipped);

/// Click pattern given the surviving photon numbers; adds noise clicks and
/// applies window migration. Used by transmit_and_detect and by tests that
/// need to condition on photon number.
CycleOutcome detect_given_photons(const PreparedQubit& alice, const PreparedQubit& bob,
                                  int k_alice, int k_bob, const TransmitParams& p,
                                  RngStream& rng);

/// Full per-cycle chain: Poisson photon numbers, loss thinning, beamsplitter
/// interference, threshold detection, noise.
CycleOutcome transmit_and_detect(const PreparedQubit& alice, const PreparedQubit& bob,
                                 const TransmitParams& p, RngStream& rng);

enum class BsmPattern { none, psi_minus, psi_plus, other };

BsmPattern classify_pattern(unsigned clicks);

/// Announces only the cross-detector cross-window pattern, with no
/// additional clicks in the cycle.
std::optional<BsmAnnouncement> bsm_decide(const CycleOutcome& outcome,
                                          std::uint64_t cycle_index);
std::optional<BsmAnnouncement> bsm_decide(std::span<const DetectionEvent> events);

struct PreparationLogEntry {
    Basis basis = Basis::z;
    int bit = 0;
    int intensity_index = 0;
};

struct SiftedRecord {
    std::uint64_t cycle_index = 0;
    PreparationLogEntry alice;
    PreparationLogEntry bob;
    bool flip_applied = false;  // Bob's key bit is the complement of bob.bit
};

struct SiftOutcome {
    std::vector<SiftedRecord> records;
    std::uint64_t dropped = 0;  // announcements whose cycle left the buffer
};

/// FIFO sifting: preparation entries are buffered for buffer_depth cycles;
/// an announcement for cycle c becomes available announce_delay_cycles
/// later and is kept only if the entry is still buffered. Throws
/// std::logic_error on an announcement for a cycle never prepared.
SiftOutcome sift(std::span<const PreparationLogEntry> alice_log,
                 std::span<const PreparationLogEntry> bob_log,
                 std::span<const BsmAnnouncement> announcements, std::size_t buffer_depth,
                 std::size_t announce_delay_cycles);

struct TallyCell {
    std::uint64_t pairs = 0;
    std::uint64_t announced = 0;
    std::uint64_t errors = 0;

    double gain() const { return pairs ? double(announced) / double(pairs) : 0.0; }
    double error_rate() const { return announced ? double(errors) / double(announced) : 0.0; }
    /// binomial standard error of the gain estimate
    double gain_stderr() const;
    /// binomial standard error of the conditional error estimate
    double error_stderr() const;
};

struct CampaignScenario {
    DecoyParams decoy;
    DetectorSpec detector;
    double loss_alice_db = 0.0;  // channel loss only; efficiency applied separately
    double loss_bob_db = 0.0;
    double raman_p = 0.0;
    double dark_p = 0.0;
    double clock_hz = 20e6;
    std::uint64_t buffer_depth = 1024;
    std::uint64_t announce_delay_cycles = 128;
};

struct CampaignResult {
    std::uint64_t cycles = 0;
    TallyCell cell[2][3][3];  // [basis][alice intensity][bob intensity]
    TallyCell tagged11[2];    // both sides emitted exactly one photon
    std::uint64_t psi_plus = 0;
    std::uint64_t dropped_announcements = 0;
    std::uint64_t clicks_by_origin[3] = {0, 0, 0};

    void merge(const CampaignResult& other);
    GainErrorSet to_gain_error_set() const;
};

/// Deterministic for fixed (scenario, cycles, seed) independent of worker
/// count: cycles are chunked on fixed boundaries and every cycle draws from
/// its own counter-indexed substream.
CampaignResult run_campaign(const CampaignScenario& scenario, std::uint64_t cycles,
                            std::uint64_t seed, int workers = 0);

/// Replays a capped range of campaign cycles and writes one line per cycle:
///   cycle basisA bitA intA basisB bitB intB nA nB clicks pattern
/// Counter-indexed substreams make the replay bit-identical to the campaign.
void dump_cycle_trace(const CampaignScenario& scenario, std::uint64_t seed,
                      std::uint64_t first_cycle, std::uint64_t max_cycles, std::ostream& out);

}  // namespace mdiqkd
