// SPDX-License-Identifier: Apache-2.0
//
// Inventory round with joint discovery and localization: a circular in-band
// carrier powers and reads the tag while both linear antennas hop distinct
// out-of-band tones, yielding a full 2x2 channel per hop in every read.

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <string>
#include <vector>

#include "ccp/channel.hpp"
#include "ccp/common.hpp"
#include "ccp/polarization.hpp"
#include "ccp/random.hpp"

namespace ccp {

struct FrequencyPlan {
    double inband_hz = 915e6;
    std::vector<double> hops{763e6, 790e6, 833e6, 871e6, 915e6, 938e6, 973e6, 1008e6};

    [[nodiscard]] double span() const {
        if (hops.empty()) return 0.0;
        return hops.back() - hops.front();
    }

    void validate() const {
        if (!(inband_hz > 0.0)) throw ConfigError("plan.inband must be positive");
        for (std::size_t i = 0; i < hops.size(); ++i) {
            if (!(hops[i] > 0.0)) throw ConfigError("plan.hops must be positive");
            if (i > 0 && !(hops[i] > hops[i - 1])) throw ConfigError("plan.hops must be distinct and sorted");
        }
    }
};

struct Slot {
    double h_hz = 0.0;
    double v_hz = 0.0;
};

struct SlotSchedule {
    std::vector<Slot> slots;
};

/// H walks the hops in order; V walks them cyclically shifted by ceil(n/2),
/// so the two antennas never radiate the same tone (which would sum into a
/// single tilted linear state) and each hop is visited once per antenna.
inline SlotSchedule build_schedule(const FrequencyPlan& plan) {
    plan.validate();
    const std::size_t n = plan.hops.size();
    if (n < 2) throw ConfigError("schedule needs at least two hops");
    const std::size_t shift = (n + 1) / 2;
    SlotSchedule s;
    s.slots.reserve(n);
    for (std::size_t i = 0; i < n; ++i) s.slots.push_back({plan.hops[i], plan.hops[(i + shift) % n]});
    return s;
}

/// Index into the 2x2 per-hop channel; first letter is the transmit antenna.
enum Entry : std::size_t { kHH = 0, kVH = 1, kHV = 2, kVV = 3 };

struct HopChannel {
    double freq_hz = 0.0;
    std::array<Complex, 4> h{};
    /// Effective noise standard deviation of each entry.
    std::array<double, 4> sigma{};

    [[nodiscard]] double snr_db(std::size_t e) const {
        return sigma[e] == 0.0 ? kPosInf : amplitude_to_db(std::abs(h[e]) / sigma[e]);
    }
};

/// Per-hop channel of one read. When single_entry is set only h[kHH] is
/// populated (fixed-antenna sensing with one transmit/receive pair).
struct WidebandChannel {
    std::vector<HopChannel> hops;
    bool single_entry = false;
};

struct TagRead {
    std::string tag_id;
    std::size_t tag_index = 0;
    ReaderPose pose;
    WidebandChannel channel;
    double uplink_snr_db = kUnreadSnrDb;
    bool success = false;
    double timestamp_s = 0.0;
};

struct LinkBudget {
    /// Total in-band EIRP of the synthesized circular carrier (both chains).
    double inband_eirp_dbm = 30.0;
    double oob_eirp_dbm = -20.0;
    double tag_backscatter_loss_db = 6.0;
    double thermal_noise_dbm = -125.0;
    /// How far below a leakage carrier its in-band noise contribution sits.
    double si_rejection_db = 63.0;
    double decode_threshold_db = 3.0;
    double read_duration_s = 0.006;
    /// Disables every noise source (thermal and leakage-induced).
    bool noise_free = false;

    /// EIRP of a single transmit chain when the circular carrier splits
    /// evenly over two.
    [[nodiscard]] double chain_eirp_dbm() const { return inband_eirp_dbm - power_to_db(2.0); }
};

enum class InbandMode {
    circular_crosspol,  ///< RHCP transmit, cross-polarized RHCP receive
    circular_raw,       ///< RHCP transmit, LHCP receive, natural isolation only
    horizontal_nulled,  ///< single horizontal pair with over-the-wire nulling
    vertical_nulled,    ///< single vertical pair with over-the-wire nulling
};

inline bool is_linear(InbandMode m) {
    return m == InbandMode::horizontal_nulled || m == InbandMode::vertical_nulled;
}

enum class SensingMode {
    linear_2x2,     ///< hopping tones on both linear antennas
    patch_circular, ///< fixed commercial circular patch, one entry per hop
};

/// Which transmit/receive stages a reader variant uses.
struct ReaderDesign {
    std::string name = "ccp";
    InbandMode inband = InbandMode::circular_crosspol;
    SensingMode sensing = SensingMode::linear_2x2;
    bool oob_nulling = true;
    /// Off for read-rate studies that only need discovery.
    bool sensing_enabled = true;
    ResonantPatch patch;

    static ReaderDesign ccp() { return {}; }

    static ReaderDesign linear_ib() {
        ReaderDesign d;
        d.name = "linear_ib";
        d.inband = InbandMode::horizontal_nulled;
        return d;
    }

    static ReaderDesign no_crosspol() {
        ReaderDesign d;
        d.name = "no_crosspol";
        d.inband = InbandMode::circular_raw;
        return d;
    }

    static ReaderDesign no_nulling() {
        ReaderDesign d;
        d.name = "no_nulling";
        d.oob_nulling = false;
        return d;
    }

    static ReaderDesign circular_tof(double patch_q) {
        ReaderDesign d;
        d.name = "circular_tof";
        d.sensing = SensingMode::patch_circular;
        d.patch.quality = patch_q;
        return d;
    }
};

struct InbandComposite {
    /// Receive-side polarization scalar alone (tag axis onto receiver).
    Complex uplink_polarization{};
    /// Tag response in transmit-amplitude units.
    Complex tag_term{};
    Complex leakage{};
    Complex composite{};
    double signal_dbm = kNegInf;
    double noise_dbm = kNegInf;
    double decode_snr_db = kNegInf;
};

inline JonesVector inband_tx_polarization(InbandMode mode) {
    switch (mode) {
        case InbandMode::horizontal_nulled: return make_linear(TagAngle(0.0));
        case InbandMode::vertical_nulled: return make_linear(TagAngle(kPi / 2.0));
        default: return make_rhcp();
    }
}

/// A linear carrier uses one transmit chain; the circular one uses both.
inline double inband_eirp_dbm(InbandMode mode, const LinkBudget& link) {
    return is_linear(mode) ? link.chain_eirp_dbm() : link.inband_eirp_dbm;
}

/// Receive chain for the powering carrier. For the circular modes the H and
/// V receive branches are combined in quadrature; the cross-polarized choice
/// is the one whose plain inner product with the transmitter vanishes.
inline InbandComposite inband_receive_chain(const ReaderPose& pose, const TagSpec* tag,
                                            const std::vector<PathSpec>& paths, InbandMode mode,
                                            const InterferenceModel& model, const LinkBudget& link,
                                            double freq_hz) {
    const JonesVector tx = inband_tx_polarization(mode);
    JonesVector rx;
    AntennaPair pair = AntennaPair::circular;
    LeakageScheme scheme = LeakageScheme::crosspol;
    switch (mode) {
        case InbandMode::circular_crosspol: rx = make_rhcp(); break;
        case InbandMode::circular_raw:
            rx = make_lhcp();
            scheme = LeakageScheme::raw;
            break;
        case InbandMode::horizontal_nulled:
        case InbandMode::vertical_nulled:
            rx = tx;
            pair = mode == InbandMode::vertical_nulled ? AntennaPair::vertical : AntennaPair::horizontal;
            scheme = LeakageScheme::nulled;
            break;
    }
    const double eirp = inband_eirp_dbm(mode, link);
    InbandComposite out;
    out.leakage = residual_self_interference(model, freq_hz, pair, scheme);
    if (tag != nullptr) {
        out.uplink_polarization = project(make_linear(tag->roll), rx, false);
        out.tag_term = backscatter_channel(pose, *tag, freq_hz, tx, rx, paths) *
                       db_to_amplitude(-link.tag_backscatter_loss_db);
        out.signal_dbm = eirp + amplitude_to_db(std::abs(out.tag_term));
    }
    out.composite = out.tag_term + out.leakage;

    const double leak_dbm = eirp + amplitude_to_db(std::abs(out.leakage));
    const NoiseContext ctx{1.0, leak_dbm, model.adc_ceiling_dbm};
    out.noise_dbm = db_add(link.thermal_noise_dbm, leak_dbm - link.si_rejection_db) + ctx.saturation_penalty_db();
    out.decode_snr_db = out.signal_dbm - out.noise_dbm;
    return out;
}

/// Leakage power reaching linear receive antenna `rx_is_v` from the in-band
/// carrier, used for the ADC headroom check during out-of-band sensing.
inline double inband_leak_into_linear_rx_dbm(bool rx_is_v, bool nulling, const InterferenceModel& model,
                                             const LinkBudget& link, double inband_hz) {
    const AntennaPair same = rx_is_v ? AntennaPair::vertical : AntennaPair::horizontal;
    const LeakageScheme s = nulling ? LeakageScheme::nulled : LeakageScheme::raw;
    const double chain = link.chain_eirp_dbm();
    return db_add(chain - model.isolation_db(inband_hz, same, s),
                  chain - model.isolation_db(inband_hz, AntennaPair::cross, LeakageScheme::crosspol));
}

namespace detail {

inline double oob_noise_sigma(double leak_dbm, const LinkBudget& link) {
    if (link.noise_free) return 0.0;
    const double n_dbm = db_add(link.thermal_noise_dbm, leak_dbm - link.si_rejection_db);
    // Channel entries are normalized to the transmitted tone and exclude
    // the tag's modulation loss.
    return db_to_amplitude(n_dbm - link.oob_eirp_dbm + link.tag_backscatter_loss_db);
}

}  // namespace detail

/// Out-of-band channel sounding for one powered and decoded tag. Always
/// consumes 4 complex draws per hop regardless of design.
inline WidebandChannel sense_channel(const ReaderPose& pose, const TagSpec& tag, const std::vector<PathSpec>& paths,
                                     const FrequencyPlan& plan, const SlotSchedule& schedule,
                                     const ReaderDesign& design, const InterferenceModel& model,
                                     const LinkBudget& link, RandomStream& rng) {
    WidebandChannel ch;
    ch.hops.resize(plan.hops.size());
    for (std::size_t i = 0; i < plan.hops.size(); ++i) ch.hops[i].freq_hz = plan.hops[i];
    auto hop_index = [&](double f) {
        return static_cast<std::size_t>(std::find(plan.hops.begin(), plan.hops.end(), f) - plan.hops.begin());
    };

    if (design.sensing == SensingMode::patch_circular) {
        ch.single_entry = true;
        for (HopChannel& hop : ch.hops) {
            const JonesVector pol = design.patch.at(hop.freq_hz);
            const Complex clean = backscatter_channel(pose, tag, hop.freq_hz, pol, pol, paths);
            const double leak =
                link.oob_eirp_dbm - model.isolation_db(hop.freq_hz, AntennaPair::circular, LeakageScheme::crosspol);
            const double ib = link.inband_eirp_dbm -
                              model.isolation_db(plan.inband_hz, AntennaPair::circular, LeakageScheme::crosspol);
            const NoiseContext ctx{detail::oob_noise_sigma(leak, link), db_add(ib, leak), model.adc_ceiling_dbm};
            for (std::size_t e = 0; e < 4; ++e) {
                const NoisySample s = add_noise(clean, ctx, rng);
                if (e == kHH) {
                    hop.h[kHH] = s.value;
                    hop.sigma[kHH] = ctx.effective_sigma();
                }
            }
        }
        return ch;
    }

    const LeakageScheme scheme = design.oob_nulling ? LeakageScheme::nulled : LeakageScheme::raw;
    const JonesVector ant[2] = {make_linear(TagAngle(0.0)), make_linear(TagAngle(kPi / 2.0))};
    for (const Slot& slot : schedule.slots) {
        const double tone[2] = {slot.h_hz, slot.v_hz};
        for (int rx = 0; rx < 2; ++rx) {
            // Composite power at this receive antenna while both tones are on.
            double leak_tone[2];
            for (int tx = 0; tx < 2; ++tx) {
                const AntennaPair pair = tx != rx ? AntennaPair::cross
                                                  : (rx == 0 ? AntennaPair::horizontal : AntennaPair::vertical);
                const LeakageScheme s = pair == AntennaPair::cross ? LeakageScheme::crosspol : scheme;
                leak_tone[tx] = link.oob_eirp_dbm - model.isolation_db(tone[tx], pair, s);
            }
            const double composite =
                db_add(inband_leak_into_linear_rx_dbm(rx == 1, design.oob_nulling, model, link, plan.inband_hz),
                       db_add(leak_tone[0], leak_tone[1]));
            for (int tx = 0; tx < 2; ++tx) {
                HopChannel& hop = ch.hops[hop_index(tone[tx])];
                const Complex clean = backscatter_channel(pose, tag, tone[tx], ant[tx], ant[rx], paths);
                const NoiseContext ctx{detail::oob_noise_sigma(leak_tone[tx], link), composite,
                                       model.adc_ceiling_dbm};
                const NoisySample s = add_noise(clean, ctx, rng);
                const std::size_t e = static_cast<std::size_t>(tx + 2 * rx);  // kHH, kVH, kHV, kVV
                hop.h[e] = s.value;
                hop.sigma[e] = ctx.effective_sigma();
            }
        }
    }
    return ch;
}

/// Simulated time base: each successful read occupies one schedule round.
struct InventoryClock {
    double now_s = 0.0;
};

/// One inventory round at a fixed pose. Each tag gets its own child stream
/// keyed by its index, so results do not depend on which other tags answer.
inline std::vector<TagRead> run_inventory(const Environment& env, const ReaderPose& pose, const FrequencyPlan& plan,
                                          const SlotSchedule& schedule, const ReaderDesign& design,
                                          const LinkBudget& link, const RandomStream& rng,
                                          InventoryClock* clock = nullptr) {
    std::vector<TagRead> reads;
    reads.reserve(env.tags.size());
    InventoryClock local;
    InventoryClock& clk = clock ? *clock : local;
    for (std::size_t t = 0; t < env.tags.size(); ++t) {
        const TagSpec& tag = env.tags[t];
        RandomStream tag_rng = rng.child({t});
        TagRead read;
        read.tag_id = tag.id;
        read.tag_index = t;
        read.pose = pose;
        read.timestamp_s = clk.now_s;

        if (reader_tag_distance(pose, tag) < 0.01) {
            reads.push_back(std::move(read));
            continue;
        }
        const PoweringResult power = tag_powered(pose, tag, inband_tx_polarization(design.inband),
                                                 inband_eirp_dbm(design.inband, link), plan.inband_hz);
        const std::vector<PathSpec> paths = env.paths_for(pose, tag);
        if (power.powered) {
            const InbandComposite rx =
                inband_receive_chain(pose, &tag, paths, design.inband, env.interference, link, plan.inband_hz);
            if (rx.decode_snr_db >= link.decode_threshold_db) {
                read.success = true;
                read.uplink_snr_db = rx.decode_snr_db;
                if (design.sensing_enabled)
                    read.channel =
                        sense_channel(pose, tag, paths, plan, schedule, design, env.interference, link, tag_rng);
                clk.now_s += link.read_duration_s;
            }
        }
        reads.push_back(std::move(read));
    }
    return reads;
}

}  // namespace ccp
