#pragma once

#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "trialsynth/dataset.hpp"
#include "trialsynth/model.hpp"

namespace testing_support {

inline std::string data_path(const std::string& rel) { return std::string(TRIALSYNTH_DATA_DIR) + "/" + rel; }

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline trialsynth::DatabaseSnapshot sample_corpus() {
  return trialsynth::load_database(data_path("sample_corpus.jsonl"));
}

inline constexpr const char* kReview = "CD000215";
inline constexpr const char* kSeizureMa = "CD000215.ma1";
inline constexpr const char* kChildren = "CD000215.ma1.sg2";
inline constexpr const char* kSingh = "Singh 2022:1/19,1/20";

// Children subgroup, albendazole as target group, Singh 2022 added.
inline trialsynth::Selection children_selection(trialsynth::EffectScale scale = trialsynth::EffectScale::LogRiskRatio) {
  trialsynth::Selection s;
  s.items.push_back({kSeizureMa, std::vector<std::string>{kChildren}});
  s.target_group = trialsynth::TargetGroup::Group2;
  s.scale = scale;
  s.overlay.push_back(trialsynth::parse_overlay(kSingh, scale));
  return s;
}

// Random corpus with every data kind, awkward labels and non-trivial doubles.
inline trialsynth::DatabaseSnapshot random_corpus(std::size_t n_reviews, std::uint32_t seed) {
  using namespace trialsynth;
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> small(1, 4);
  std::uniform_int_distribution<std::int64_t> total(2, 400);
  std::uniform_real_distribution<double> u(-50.0, 50.0);
  std::uniform_real_distribution<double> pos(0.01, 30.0);
  const std::vector<std::string> words{"alpha", "Beta", "gamma \"quoted\"", "delta, comma", "épsilon", "zeta\\slash"};
  auto word = [&] { return words[rng() % words.size()]; };
  std::vector<Review> reviews;
  for (std::size_t r = 0; r < n_reviews; ++r) {
    Review rv;
    rv.id = "R" + std::to_string(r);
    rv.title = "Review " + std::to_string(r) + " " + word();
    rv.year = 1990 + static_cast<int>(rng() % 35);
    for (int i = 0, n = small(rng) - 1; i < n; ++i) rv.topics.push_back(word());
    for (int i = 0, n = small(rng) - 1; i < n; ++i) rv.keywords.push_back(word());
    for (int m = 0, nm = small(rng); m < nm; ++m) {
      MetaAnalysis ma;
      ma.id = rv.id + ".ma" + std::to_string(m);
      ma.review_id = rv.id;
      ma.name = "Outcome " + word();
      const int kind = static_cast<int>(rng() % 3);
      ma.outcome_kind = kind == 1 ? OutcomeKind::Continuous : OutcomeKind::Dichotomous;
      ma.group1_label = "G1 " + word();
      ma.group2_label = "G2 " + word();
      for (int g = 0, ng = small(rng); g < ng; ++g) {
        Subgroup sg;
        sg.id = ma.id + ".sg" + std::to_string(g);
        sg.name = "Subgroup " + word();
        for (int s = 0, ns = small(rng); s < ns; ++s) {
          Study st;
          st.label = "Study " + std::to_string(s) + " " + word();
          if (kind == 0) {
            const auto n1 = total(rng), n2 = total(rng);
            st.data = DichotomousCounts{static_cast<std::int64_t>(rng() % (n1 + 1)), n1,
                                        static_cast<std::int64_t>(rng() % (n2 + 1)), n2};
          } else if (kind == 1) {
            st.data = ContinuousSummaries{u(rng), pos(rng), total(rng), u(rng), pos(rng), total(rng)};
          } else {
            st.data = PrecomputedEstimate{u(rng) / 10.0, pos(rng) / 10.0, EffectScale::LogOddsRatio};
          }
          sg.studies.push_back(std::move(st));
        }
        ma.subgroups.push_back(std::move(sg));
      }
      rv.meta_analyses.push_back(std::move(ma));
    }
    reviews.push_back(std::move(rv));
  }
  return DatabaseSnapshot::from_reviews(std::move(reviews));
}

}  // namespace testing_support
