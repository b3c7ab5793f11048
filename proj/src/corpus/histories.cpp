#include <algorithm>
#include <map>

#include "recinv/corpus.hpp"

namespace recinv::corpus {

std::vector<UserHistory> build_histories(std::span<const RatingRecord> records) {
  std::map<std::string, std::vector<RatingRecord>> by_user;
  for (const auto& r : records) by_user[r.user_id].push_back(r);

  std::vector<UserHistory> out;
  out.reserve(by_user.size());
  for (auto& [user, rows] : by_user) {
    // Stable: ties and untimestamped rows keep input order.
    std::stable_sort(rows.begin(), rows.end(), [](const RatingRecord& a, const RatingRecord& b) {
      if (a.timestamp && b.timestamp) return *a.timestamp > *b.timestamp;
      return a.timestamp.has_value() && !b.timestamp.has_value();
    });
    UserHistory h;
    h.user_id = user;
    for (const auto& r : rows) {
      if (r.age && r.gender) {
        h.demographics = Demographics{Profile{*r.age, *r.gender}, DemographicsSource::Recorded};
        break;
      }
    }
    h.records = std::move(rows);
    out.push_back(std::move(h));
  }
  return out;
}

UserHistory ensure_demographics(UserHistory history, util::Rng& rng) {
  if (history.demographics) return history;
  Demographics d;
  d.profile.age = static_cast<int>(rng.uniform_int(kMinSyntheticAge, kMaxSyntheticAge));
  d.profile.gender = rng.below(2) == 0 ? Gender::Male : Gender::Female;
  d.source = DemographicsSource::Synthetic;
  history.demographics = d;
  return history;
}

ThresholdSplit split_by_threshold(const UserHistory& history, double k) {
  ThresholdSplit s;
  for (const auto& r : history.records) {
    (r.rating >= k ? s.preferred : s.nonpreferred).push_back(r);
  }
  return s;
}

}  // namespace recinv::corpus
