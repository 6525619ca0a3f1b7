#include "ape/workspace.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "ape/parallel.hpp"

namespace ape {

namespace {
constexpr double kRowCeiling = 1e30;
}

struct Workspace::SampleSet {
    Target target;
    std::vector<double> obs;  // non-switched draws, row-major
    std::size_t n_free = 0;
    double switched_reject = 0.0;
    double adhoc = 0.0;
    double switched_fraction = 0.0;
    std::vector<double> scale;
    bool scaled = false;
    std::vector<std::vector<float>> null_rows;
    std::vector<std::vector<float>> alt_rows;
    std::vector<float> g;
    std::uint64_t g_version = std::numeric_limits<std::uint64_t>::max();
};

Workspace::Workspace(ProblemPtr problem, const DrawBank& bank, std::optional<SwitchingRule> switching,
                     TestPtr ad_hoc, std::size_t cache_budget_bytes)
    : problem_(std::move(problem)), bank_(bank), sampler_(*problem_, bank), switching_(std::move(switching)),
      ad_hoc_(std::move(ad_hoc)), budget_(cache_budget_bytes) {
    if (!ad_hoc_) throw std::invalid_argument("Workspace: ad hoc test required");
}

Workspace::~Workspace() = default;

std::size_t Workspace::add_set(const Target& target) {
    auto s = std::make_unique<SampleSet>();
    s->target = target;
    const std::size_t d = problem_->obs_dim();
    std::vector<double> y(d);
    double adhoc = 0.0, switched = 0.0;
    std::size_t n_switched = 0;
    s->obs.reserve(bank_.n * d);
    for (std::size_t m = 0; m < bank_.n; ++m) {
        sampler_.sample(target, m, y);
        adhoc += ad_hoc_->decide(y);
        if (switching_ && switching_->switches(y)) {
            switched += switching_->standard_test->decide(y);
            ++n_switched;
        } else {
            s->obs.insert(s->obs.end(), y.begin(), y.end());
        }
    }
    s->obs.shrink_to_fit();
    s->n_free = bank_.n - n_switched;
    s->switched_reject = switched;
    s->adhoc = adhoc / static_cast<double>(bank_.n);
    s->switched_fraction = static_cast<double>(n_switched) / static_cast<double>(bank_.n);
    sets_.push_back(std::move(s));
    return sets_.size() - 1;
}

std::size_t Workspace::add_null(const NullComponent& c) {
    null_.push_back(c);
    null_set_.push_back(add_set(c));
    return null_.size() - 1;
}

std::size_t Workspace::add_alternative(const ParameterPoint& p) {
    alt_.points.push_back(p);
    alt_set_.push_back(add_set(p));
    weights_.push_back(0.0);
    ++weights_version_;
    return alt_.size() - 1;
}

double Workspace::adhoc_rejection(std::size_t set) const { return sets_.at(set)->adhoc; }

double Workspace::switched_fraction(std::size_t set) const { return sets_.at(set)->switched_fraction; }

void Workspace::set_weights(std::span<const double> weights) {
    if (weights.size() != alt_.size()) throw std::invalid_argument("Workspace: weight length mismatch");
    if (std::equal(weights.begin(), weights.end(), weights_.begin())) return;
    weights_.assign(weights.begin(), weights.end());
    active_alt_.clear();
    for (std::size_t j = 0; j < weights_.size(); ++j)
        if (weights_[j] > 0.0) active_alt_.push_back(j);
    ++weights_version_;
}

void Workspace::fill_row(const SampleSet& s, bool null_side, std::size_t index, std::vector<float>& out) const {
    std::vector<double> logs(s.n_free);
    if (null_side) {
        mixture_log_density_batch(null_[index], s.obs, logs, *problem_);
    } else {
        problem_->log_density_batch(alt_[index], s.obs, logs);
    }
    out.resize(s.n_free);
    for (std::size_t m = 0; m < s.n_free; ++m) {
        const double v = std::exp(logs[m] - s.scale[m]);
        if (std::isnan(v)) throw std::runtime_error("Workspace: non-finite density");
        out[m] = static_cast<float>(std::min(v, kRowCeiling));
    }
}

const std::vector<float>& Workspace::row(SampleSet& s, bool null_side, std::size_t index,
                                         std::vector<float>& scratch) {
    if (!s.scaled) {
        // Scale: the largest null log density over the components known now.
        s.scale.assign(s.n_free, -std::numeric_limits<double>::infinity());
        std::vector<double> logs(s.n_free);
        std::vector<std::vector<double>> all_logs(null_.size());
        for (std::size_t i = 0; i < null_.size(); ++i) {
            mixture_log_density_batch(null_[i], s.obs, logs, *problem_);
            for (std::size_t m = 0; m < s.n_free; ++m) s.scale[m] = std::max(s.scale[m], logs[m]);
            all_logs[i] = logs;
        }
        if (null_.empty()) problem_->log_density_batch(problem_->reference_point(), s.obs, s.scale);
        for (std::size_t m = 0; m < s.n_free; ++m)
            if (!std::isfinite(s.scale[m])) throw std::runtime_error("Workspace: non-finite null density");
        s.scaled = true;
        // Keep the rows just computed while the budget allows.
        s.null_rows.resize(null_.size());
        for (std::size_t i = 0; i < null_.size(); ++i) {
            const std::size_t bytes = s.n_free * sizeof(float);
            if (used_bytes_.fetch_add(bytes) + bytes > budget_) {
                used_bytes_.fetch_sub(bytes);
                break;
            }
            auto& r = s.null_rows[i];
            r.resize(s.n_free);
            for (std::size_t m = 0; m < s.n_free; ++m)
                r[m] = static_cast<float>(std::min(std::exp(all_logs[i][m] - s.scale[m]), kRowCeiling));
        }
    }
    auto& rows = null_side ? s.null_rows : s.alt_rows;
    if (rows.size() <= index) rows.resize(null_side ? null_.size() : alt_.size());
    auto& r = rows[index];
    if (r.size() == s.n_free && s.n_free > 0) return r;
    const std::size_t bytes = s.n_free * sizeof(float);
    if (used_bytes_.fetch_add(bytes) + bytes <= budget_) {
        fill_row(s, null_side, index, r);
        return r;
    }
    used_bytes_.fetch_sub(bytes);
    fill_row(s, null_side, index, scratch);
    return scratch;
}

double Workspace::rejection_one(SampleSet& s, std::span<const double> multipliers,
                                std::span<const std::size_t> active_null) {
    const double n = static_cast<double>(bank_.n);
    if (s.n_free == 0) return s.switched_reject / n;
    if (active_null.empty()) return (static_cast<double>(s.n_free) + s.switched_reject) / n;

    thread_local std::vector<float> scratch;
    thread_local std::vector<std::vector<float>> scratch_rows;
    thread_local std::vector<const float*> ptr;
    thread_local std::vector<float> coef;
    // Row pointers; rows beyond the cache budget go to per-call scratch.
    auto gather = [&](bool null_side, std::span<const std::size_t> idx, auto&& weight) {
        ptr.clear();
        coef.clear();
        scratch_rows.resize(std::max(scratch_rows.size(), idx.size()));
        for (std::size_t k = 0; k < idx.size(); ++k) {
            const auto& r = row(s, null_side, idx[k], scratch);
            if (&r == &scratch) {
                scratch_rows[k].swap(scratch);
                ptr.push_back(scratch_rows[k].data());
            } else {
                ptr.push_back(r.data());
            }
            coef.push_back(static_cast<float>(weight(idx[k])));
        }
    };
    constexpr std::size_t kChunk = 1024;
    float acc[kChunk];
    if (s.g_version != weights_version_) {
        gather(false, active_alt_, [&](std::size_t j) { return weights_[j]; });
        s.g.resize(s.n_free);
        for (std::size_t c0 = 0; c0 < s.n_free; c0 += kChunk) {
            const std::size_t len = std::min(kChunk, s.n_free - c0);
            std::fill_n(acc, len, 0.0f);
            for (std::size_t k = 0; k < ptr.size(); ++k) {
                const float w = coef[k];
                const float* a = ptr[k] + c0;
                for (std::size_t m = 0; m < len; ++m) acc[m] += w * a[m];
            }
            std::copy_n(acc, len, s.g.data() + c0);
        }
        s.g_version = weights_version_;
    }
    gather(true, active_null, [&](std::size_t i) { return multipliers[i]; });
    std::size_t count = 0;
    const float* g = s.g.data();
    for (std::size_t c0 = 0; c0 < s.n_free; c0 += kChunk) {
        const std::size_t len = std::min(kChunk, s.n_free - c0);
        std::fill_n(acc, len, 0.0f);
        for (std::size_t k = 0; k < ptr.size(); ++k) {
            const float l = coef[k];
            const float* b = ptr[k] + c0;
            for (std::size_t m = 0; m < len; ++m) acc[m] += l * b[m];
        }
        for (std::size_t m = 0; m < len; ++m) count += g[c0 + m] >= acc[m] ? 1u : 0u;
    }
    return (static_cast<double>(count) + s.switched_reject) / n;
}

void Workspace::rejection(std::span<const double> multipliers, std::span<const std::size_t> sets,
                          std::span<double> out) {
    if (multipliers.size() != null_.size()) throw std::invalid_argument("Workspace: multiplier length mismatch");
    std::vector<std::size_t> active;
    for (std::size_t i = 0; i < multipliers.size(); ++i)
        if (multipliers[i] > 0.0) active.push_back(i);
    parallel_for(sets.size(), [&](std::size_t k) {
        out[k] = rejection_one(*sets_.at(sets[k]), multipliers, active);
    });
}

}  // namespace ape
