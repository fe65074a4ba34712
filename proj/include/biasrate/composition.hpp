#pragma once

// Rating calculus for sequentially composed services.

#include <span>
#include <string>
#include <vector>

#include "biasrate/core.hpp"

namespace biasrate {

/// Rating of `first` followed by `second`.
///
///   first \ second |  BS            UCS   DSBS
///   ---------------+--------------------------
///   BS             |  BS|DSBS|UCS   UCS   BS
///   UCS            |  BS            UCS   DSBS
///   DSBS           |  BS            UCS   DSBS
///
/// Two biased services may cancel or reinforce each other, so BS * BS is
/// indeterminate and must be measured directly.
constexpr unsigned compose_rating_mask(BiasRating first, BiasRating second) noexcept {
  constexpr unsigned bs = 1u << 0, dsbs = 1u << 1, ucs = 1u << 2;
  // Rows and columns in enum order BS, DSBS, UCS.
  constexpr unsigned table[3][3] = {
      /* BS   */ {bs | dsbs | ucs, bs, ucs},
      /* DSBS */ {bs, dsbs, ucs},
      /* UCS  */ {bs, dsbs, ucs},
  };
  return table[static_cast<unsigned>(first)][static_cast<unsigned>(second)];
}

inline RatingSet compose_rating(BiasRating first, BiasRating second) {
  return RatingSet::from_mask(compose_rating_mask(first, second));
}

/// Union of compose_rating over every pair of members.
inline RatingSet compose_set(const RatingSet& first, const RatingSet& second) {
  unsigned mask = 0;
  for (auto a : first.members())
    for (auto b : second.members()) mask |= compose_rating_mask(a, b);
  return RatingSet::from_mask(mask);
}

/// Left fold of compose_set over a pipeline.
inline RatingSet compose_chain(std::span<const RatingSet> stages) {
  if (stages.empty()) throw UsageError("compose_chain needs at least one stage");
  RatingSet acc = stages.front();
  for (std::size_t i = 1; i < stages.size(); ++i) acc = compose_set(acc, stages[i]);
  return acc;
}

inline RatingSet compose_chain(std::initializer_list<RatingSet> stages) {
  return compose_chain(std::span<const RatingSet>(stages.begin(), stages.size()));
}

/// A rated component of a pipeline. Components are only composable when they
/// were rated against the same attribute.
struct RatedComponent {
  std::string id;
  AttributeSpec attribute;
  RatingSet rating;
};

inline RatingSet compose_chain(std::span<const RatedComponent> stages) {
  if (stages.empty()) throw UsageError("compose_chain needs at least one stage");
  std::vector<RatingSet> ratings;
  for (const auto& s : stages) {
    if (!(s.attribute == stages.front().attribute))
      throw UsageError("cannot compose '" + stages.front().id + "' and '" + s.id +
                       "': they were rated on different attributes");
    ratings.push_back(s.rating);
  }
  return compose_chain(std::span<const RatingSet>(ratings));
}

}  // namespace biasrate
