#include "nlts.hpp"

#include <algorithm>
#include <limits>

#include "error.hpp"

namespace sdev {

Associations associate(std::span<const Activity> average, std::span<const Activity> seq, long* cost) {
    const auto r = dtw(average, seq);
    Associations assoc(average.size());
    for (const auto& step : r.path) assoc[step.i].push_back(step.j);
    if (cost) *cost = r.cost;
    return assoc;
}

CostMatrix pairwise_costs(std::span<const ActivitySequence> seqs) {
    const std::size_t n = seqs.size();
    CostMatrix out(n, std::vector<long>(n, 0));
    for (std::size_t a = 0; a < n; ++a)
        for (std::size_t b = a + 1; b < n; ++b) out[a][b] = out[b][a] = dtw_cost(seqs[a], seqs[b]);
    return out;
}

std::size_t medoid_index(const CostMatrix& costs) {
    if (costs.empty()) throw ConfigError("medoid of an empty cohort");
    std::size_t best = 0;
    long best_total = 0;
    for (std::size_t a = 0; a < costs.size(); ++a) {
        if (costs[a].size() != costs.size()) throw ConfigError("medoid: cost matrix is not square");
        long total = 0;
        for (auto c : costs[a]) total += c;
        if (a == 0 || total < best_total) best = a, best_total = total;
    }
    return best;
}

std::size_t medoid_index(std::span<const ActivitySequence> seqs) {
    if (seqs.empty()) throw ConfigError("medoid of an empty cohort");
    return medoid_index(pairwise_costs(seqs));
}

namespace {

ActivitySequence barycenter_update(const ActivitySequence& current, std::span<const ActivitySequence> seqs,
                                   const std::vector<Associations>& assoc) {
    std::array<std::size_t, kDimensions> alphabet{};
    for (const auto& s : seqs)
        for (const auto& a : s)
            for (std::size_t d = 0; d < kDimensions; ++d) alphabet[d] = std::max<std::size_t>(alphabet[d], a.codes[d] + 1u);

    ActivitySequence next(current.size());
    std::array<std::vector<std::uint32_t>, kDimensions> counts;
    for (std::size_t d = 0; d < kDimensions; ++d) counts[d].resize(alphabet[d]);

    for (std::size_t l = 0; l < current.size(); ++l) {
        for (auto& c : counts) std::fill(c.begin(), c.end(), 0u);
        for (std::size_t s = 0; s < seqs.size(); ++s)
            for (auto j : assoc[s][l])
                for (std::size_t d = 0; d < kDimensions; ++d) ++counts[d][seqs[s][j].codes[d]];
        for (std::size_t d = 0; d < kDimensions; ++d) {
            // max_element returns the first maximum, i.e. the lowest code.
            const auto it = std::max_element(counts[d].begin(), counts[d].end());
            next[l].codes[d] = static_cast<Code>(it - counts[d].begin());
        }
    }
    return next;
}

}  // namespace

DbaResult dba(std::span<const ActivitySequence> seqs, ActivitySequence init, const DbaOptions& opts) {
    if (seqs.empty()) throw ConfigError("dba: empty cohort");
    if (init.empty()) throw ConfigError("dba: empty initial average");
    if (opts.max_iter == 0) throw ConfigError("dba: max_iter must be positive");

    DbaResult best;
    best.cost = std::numeric_limits<long>::max();
    ActivitySequence current = std::move(init);
    std::vector<long> trace;
    std::size_t stale = 0;
    std::size_t it = 0;

    while (it < opts.max_iter) {
        ++it;
        std::vector<Associations> assoc(seqs.size());
        long total = 0;
        for (std::size_t s = 0; s < seqs.size(); ++s) {
            long c = 0;
            assoc[s] = associate(current, seqs[s], &c);
            total += c;
        }
        trace.push_back(total);
        if (total < best.cost) {
            best.cost = total;
            best.average.labels = current;
            best.average.associations = assoc;
            stale = 0;
        } else {
            ++stale;
        }
        if (total == 0 || stale >= opts.patience) break;
        auto next = barycenter_update(current, seqs, assoc);
        if (next == current) break;
        current = std::move(next);
    }
    best.cost_trace = std::move(trace);
    best.iterations = it;
    return best;
}

std::size_t Widths::total() const {
    std::size_t t = 0;
    for (auto w : values) t += w;
    return t;
}

Widths widths_from(const std::vector<Associations>& associations) {
    if (associations.empty()) throw ConfigError("widths: no associations");
    Widths w;
    w.values.assign(associations.front().size(), 1);
    for (const auto& a : associations) {
        if (a.size() != w.values.size()) throw ConfigError("widths: association sets differ in length");
        for (std::size_t l = 0; l < a.size(); ++l)
            w.values[l] = std::max<std::uint32_t>(w.values[l], static_cast<std::uint32_t>(a[l].size()));
    }
    return w;
}

Widths compute_widths(std::span<const Activity> average, std::span<const ActivitySequence> seqs,
                      std::vector<Associations>* associations) {
    Widths w;
    w.values.assign(average.size(), 1);
    std::vector<Associations> all;
    all.reserve(seqs.size());
    for (const auto& s : seqs) {
        all.push_back(associate(average, s));
        const auto& a = all.back();
        for (std::size_t l = 0; l < a.size(); ++l)
            w.values[l] = std::max<std::uint32_t>(w.values[l], static_cast<std::uint32_t>(a[l].size()));
    }
    if (associations) *associations = std::move(all);
    return w;
}

AlignedSequence unpack(std::span<const Activity> seq, const Associations& assoc, const Widths& widths) {
    if (assoc.size() != widths.values.size()) throw ConfigError("unpack: widths do not match the average length");
    AlignedSequence out;
    out.labels.reserve(widths.total());
    out.source_index.reserve(widths.total());
    for (std::size_t l = 0; l < assoc.size(); ++l) {
        const auto& items = assoc[l];
        if (items.empty() || items.size() > widths.values[l])
            throw ConfigError("unpack: inconsistent widths at average element " + std::to_string(l));
        for (std::size_t k = 0; k < widths.values[l]; ++k) {
            const auto j = items[std::min(k, items.size() - 1)];
            if (j >= seq.size()) throw ConfigError("unpack: association index out of range");
            out.labels.push_back(seq[j]);
            out.source_index.push_back(j);
        }
    }
    return out;
}

std::vector<AlignedSequence> unpack(std::span<const ActivitySequence> seqs, const std::vector<Associations>& assoc,
                                    const Widths& widths) {
    if (seqs.size() != assoc.size()) throw ConfigError("unpack: one association set per sequence required");
    std::vector<AlignedSequence> out;
    out.reserve(seqs.size());
    for (std::size_t s = 0; s < seqs.size(); ++s) out.push_back(unpack(seqs[s], assoc[s], widths));
    return out;
}

std::vector<std::uint8_t> warp_mask(const AlignedSequence& aligned, std::span<const std::uint8_t> mask) {
    std::vector<std::uint8_t> out(aligned.size());
    for (std::size_t t = 0; t < aligned.size(); ++t) {
        const auto j = aligned.source_index[t];
        if (j >= mask.size()) throw ConfigError("warp_mask: mask shorter than the source sequence");
        out[t] = mask[j];
    }
    return out;
}

CohortAlignment align_cohort(std::span<const SampledSequence> cohort, const DbaOptions& opts,
                             std::optional<std::size_t> init) {
    if (cohort.empty()) throw ConfigError("align_cohort: empty cohort");
    if (init && *init >= cohort.size()) throw ConfigError("align_cohort: initial sequence out of range");
    std::vector<ActivitySequence> seqs;
    seqs.reserve(cohort.size());
    for (const auto& s : cohort) {
        if (s.labels.empty()) throw ConfigError("align_cohort: empty sequence " + s.procedure_id);
        seqs.push_back(s.labels);
    }
    CohortAlignment out;
    out.dba = dba(seqs, seqs[init ? *init : medoid_index(seqs)], opts);
    // The associations kept by dba are those of dtw(average, s), which is
    // exactly what compute_widths would recompute.
    const auto& assoc = out.dba.average.associations;
    out.widths = widths_from(assoc);
    out.aligned = unpack(seqs, assoc, out.widths);
    for (std::size_t s = 0; s < cohort.size(); ++s) out.aligned[s].procedure_id = cohort[s].procedure_id;
    return out;
}

ReferenceAlignment align_to_reference(std::span<const Activity> reference, const SampledSequence& seq) {
    if (reference.empty() || seq.labels.empty()) throw ConfigError("align_to_reference: empty input");
    ReferenceAlignment out;
    const auto assoc = associate(reference, seq.labels);
    out.widths.values.resize(reference.size());
    for (std::size_t l = 0; l < reference.size(); ++l)
        out.widths.values[l] = static_cast<std::uint32_t>(assoc[l].size());
    out.aligned = unpack(seq.labels, assoc, out.widths);
    out.aligned.procedure_id = seq.procedure_id;
    out.expanded_reference.reserve(out.widths.total());
    for (std::size_t l = 0; l < reference.size(); ++l)
        out.expanded_reference.insert(out.expanded_reference.end(), out.widths.values[l], reference[l]);
    return out;
}

}  // namespace sdev
