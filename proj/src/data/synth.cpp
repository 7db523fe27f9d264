#include "data/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "core/error.hpp"
#include "core/rng.hpp"
#include "data/clinical_terms.hpp"
#include "data/tokenizer.hpp"

namespace eie {

namespace {

enum class Change { improved, worsened, unchanged, fresh, resolved, absent };

struct Fact {
  int entity;  // index into entity_phrases()
  Change change;
};

// Baseline/follow-up amplitudes of the planted feature pattern per change.
struct Amplitude {
  float base;
  float follow;
};

Amplitude amplitude_of(Change c) {
  switch (c) {
    case Change::improved: return {1.0f, 0.45f};
    case Change::worsened: return {0.5f, 1.15f};
    case Change::unchanged: return {0.85f, 0.85f};
    case Change::fresh: return {0.0f, 1.0f};
    case Change::resolved: return {0.9f, 0.0f};
    case Change::absent: return {0.0f, 0.0f};
  }
  return {0.0f, 0.0f};
}

// Two template variants per change; the second is never shorter than four
// words with a one-word entity.
std::string realize(const std::string& entity, Change c, int variant) {
  switch (c) {
    case Change::improved:
      return variant ? entity + " has partially improved" : entity + " has improved";
    case Change::worsened:
      return variant ? entity + " has slightly worsened" : entity + " has worsened";
    case Change::unchanged:
      return variant ? entity + " is essentially unchanged" : entity + " is unchanged";
    case Change::fresh:
      return variant ? "new " + entity + " is seen" : "there is new " + entity;
    case Change::resolved:
      return variant ? entity + " has nearly resolved" : entity + " has resolved";
    case Change::absent:
      return "there is no " + entity;
  }
  return entity;
}

// Entity present at follow-up / baseline for guidance truth purposes. The
// guidance contract is presence of a non-negated mention, so every change
// except an explicit "there is no ..." counts as present at follow-up.
bool present_follow(Change c) { return c != Change::absent; }
bool present_base(Change c) { return c != Change::absent && c != Change::fresh; }

size_t word_count(const std::string& s) { return tokenize(s).size(); }

}  // namespace

Dataset synth_generate(const SynthConfig& cfg) {
  if (cfg.num_records < 1) throw UsageError("synth_generate: num_records must be >= 1");
  if (cfg.informativeness < 0.0 || cfg.informativeness > 1.0) {
    throw UsageError("synth_generate: informativeness must be in [0, 1]");
  }
  const auto& entities = entity_phrases();
  const int n_entities = static_cast<int>(entities.size());

  Dataset ds;
  ds.header.guidance_dim = cfg.guidance_dim;
  ds.header.feature_tokens = cfg.feature_tokens;
  ds.header.feature_dim = cfg.feature_dim;

  Rng root(cfg.seed);
  Rng grammar = root.split("synth");

  // Fixed per-entity signature vectors and grid cells, shared across records
  // so the feature-to-text mapping is learnable.
  std::vector<std::vector<float>> signatures(static_cast<size_t>(n_entities));
  std::vector<std::vector<int>> cells(static_cast<size_t>(n_entities));
  for (int e = 0; e < n_entities; ++e) {
    Rng sig = grammar.split("entity_sig").split(static_cast<uint64_t>(e));
    auto& s = signatures[static_cast<size_t>(e)];
    s.resize(static_cast<size_t>(cfg.feature_dim));
    double norm = 0.0;
    for (auto& x : s) {
      x = static_cast<float>(sig.normal());
      norm += static_cast<double>(x) * x;
    }
    const float inv = static_cast<float>(1.0 / std::sqrt(std::max(norm, 1e-12)));
    for (auto& x : s) x *= inv;
    auto& cs = cells[static_cast<size_t>(e)];
    const int spots = std::min(4, cfg.feature_tokens);
    for (int r = 0; r < spots; ++r) cs.push_back((e * 7 + r * 3) % cfg.feature_tokens);
  }

  for (int i = 0; i < cfg.num_records; ++i) {
    Rng rec_rng = grammar.split("record").split(static_cast<uint64_t>(i));
    DatasetRecord rec;
    char buf[16];
    std::snprintf(buf, sizeof(buf), "r%05d", i);
    rec.id = buf;

    // facts: distinct entities, uniform change
    Rng facts_rng = rec_rng.split("facts");
    const int n_facts = 1 + static_cast<int>(facts_rng.next_below(
                                static_cast<uint64_t>(std::max(1, cfg.max_facts))));
    std::vector<int> pool(static_cast<size_t>(n_entities));
    for (int e = 0; e < n_entities; ++e) pool[static_cast<size_t>(e)] = e;
    std::vector<Fact> facts;
    for (int k = 0; k < n_facts && !pool.empty(); ++k) {
      const size_t pick = static_cast<size_t>(facts_rng.next_below(pool.size()));
      const int entity = pool[pick];
      pool.erase(pool.begin() + static_cast<std::ptrdiff_t>(pick));
      Change change;
      if (facts_rng.uniform() < 0.12) {
        change = Change::absent;
      } else {
        constexpr Change kChanges[5] = {Change::improved, Change::worsened, Change::unchanged,
                                        Change::fresh, Change::resolved};
        change = kChanges[facts_rng.next_below(5)];
      }
      facts.push_back({entity, change});
    }

    // summary; clause lengths cap at 6 words, so 3 clauses + 2 joiners never
    // exceed the 20-word grammar bound
    Rng tmpl_rng = rec_rng.split("template");
    std::string summary;
    for (size_t c = 0; c < facts.size(); ++c) {
      if (c) summary += tmpl_rng.uniform() < 0.3 ? " while " : " and ";
      summary += realize(entities[static_cast<size_t>(facts[c].entity)], facts[c].change,
                         static_cast<int>(tmpl_rng.next_below(2)));
    }
    if (word_count(summary) < 4) {
      summary = realize(entities[static_cast<size_t>(facts[0].entity)], facts[0].change, 1);
    }
    rec.summary = summary;

    // feature grids: noise plus planted per-fact patterns
    auto make_grid = [&](const char* which, bool follow) {
      Rng g = rec_rng.split(which);
      Tensor t = Tensor::zeros({cfg.feature_tokens, cfg.feature_dim});
      auto v = t.mutable_data();
      for (auto& x : v) x = static_cast<float>(cfg.noise * g.normal());
      for (const Fact& f : facts) {
        const Amplitude amp = amplitude_of(f.change);
        const float a = follow ? amp.follow : amp.base;
        if (a == 0.0f) continue;
        const auto& sig = signatures[static_cast<size_t>(f.entity)];
        for (int cell : cells[static_cast<size_t>(f.entity)]) {
          float* row = v.data() + static_cast<size_t>(cell) * cfg.feature_dim;
          for (int d = 0; d < cfg.feature_dim; ++d) row[d] += a * sig[static_cast<size_t>(d)];
        }
      }
      return t;
    };
    rec.features_b = make_grid("features_b", false);
    rec.features_f = make_grid("features_f", true);

    // guidance probabilities
    Rng p_rng = rec_rng.split("guidance");
    const bool truthful = p_rng.uniform() < cfg.informativeness;
    auto make_p = [&](bool follow) {
      std::vector<float> p(static_cast<size_t>(cfg.guidance_dim));
      for (int k = 0; k < cfg.guidance_dim; ++k) {
        const double u = p_rng.uniform();
        if (!truthful) {
          p[static_cast<size_t>(k)] = static_cast<float>(u);
          continue;
        }
        bool present = false;
        for (const Fact& f : facts) {
          if (guidance_slot(entities[static_cast<size_t>(f.entity)], cfg.guidance_dim) != k) continue;
          present = follow ? present_follow(f.change) : present_base(f.change);
        }
        p[static_cast<size_t>(k)] =
            static_cast<float>(present ? 0.75 + 0.24 * u : 0.01 + 0.24 * u);
      }
      return p;
    };
    rec.p_b = make_p(false);
    rec.p_f = make_p(true);

    ds.records.push_back(std::move(rec));
  }
  return ds;
}

}  // namespace eie
