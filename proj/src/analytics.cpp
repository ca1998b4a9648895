#include "qacal/analytics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <set>

#include "qacal/errors.hpp"
#include "qacal/stats.hpp"

namespace qacal {

namespace {

const double kNaN = std::numeric_limits<double>::quiet_NaN();

// Shared suffix pairing exam_/assess_/opinion_ columns: text after the first
// underscore, or the whole id when there is none.
std::string question_suffix(const std::string& id) {
  auto pos = id.find('_');
  return pos == std::string::npos ? id : id.substr(pos + 1);
}

}  // namespace

AggregateResult aggregate_items(const ResponseMatrix& matrix, const OpinionTable& opinions,
                                const std::vector<ItemParams>& params) {
  // Collect question suffixes in first-seen order: matrix items, then opinions.
  std::vector<std::string> order;
  std::set<std::string> seen;
  for (const auto& it : matrix.items()) {
    std::string q = question_suffix(it.id);
    if (seen.insert(q).second) order.push_back(q);
  }
  for (const auto& q : opinions.questions)
    if (seen.insert(q).second) order.push_back(q);

  AggregateResult out;
  for (const auto& q : order) {
    ItemAggregate agg;
    agg.question = q;

    for (std::size_t j = 0; j < matrix.n_items(); ++j) {
      const ItemSpec& spec = matrix.item(j);
      if (question_suffix(spec.id) != q) continue;
      double sum = 0.0;
      int n = 0;
      for (std::size_t p = 0; p < matrix.n_persons(); ++p) {
        int x = matrix.cell(p, j);
        if (x == ResponseMatrix::kAbsent) continue;
        sum += x;
        ++n;
      }
      if (n == 0) continue;
      if (spec.kind == ItemKind::dichotomous) {
        agg.exam_item_id = spec.id;
        agg.mean_exam_score = sum / n;
        agg.n_exam = n;
      } else {
        agg.mean_assessment = sum / n;
        agg.n_assess = n;
      }
    }

    for (std::size_t c = 0; c < opinions.questions.size(); ++c) {
      if (opinions.questions[c] != q) continue;
      int counts[4] = {0, 0, 0, 0};
      int n = 0;
      for (std::size_t p = 0; p < opinions.person_ids.size(); ++p) {
        const std::string& v = opinions.opinion_at(p, c);
        if (v.empty()) continue;
        for (int k = 0; k < 4; ++k)
          if (v == kOpinionChoices[k]) {
            ++counts[k];
            ++n;
            break;
          }
      }
      if (n > 0) {
        agg.n_opinion = n;
        agg.prop_reasonable = static_cast<double>(counts[0]) / n;
        agg.prop_too_easy = static_cast<double>(counts[1]) / n;
        agg.prop_complicated = static_cast<double>(counts[2]) / n;
        agg.prop_ambiguous = static_cast<double>(counts[3]) / n;
      }
    }

    if (!agg.exam_item_id.empty()) {
      for (const auto& p : params) {
        if (p.id != agg.exam_item_id || !p.is_dichotomous()) continue;
        agg.discrimination = p.dich().a;
        if (p.dich().b.has_value()) agg.difficulty = *p.dich().b;
        break;
      }
    }

    if (agg.n_exam == 0 && agg.n_assess == 0 && agg.n_opinion == 0) {
      out.excluded.push_back({q, "no responses"});
    } else {
      out.rows.push_back(std::move(agg));
    }
  }
  return out;
}

double pearson_r(const std::vector<double>& x, const std::vector<double>& y, int* n_used) {
  double sx = 0.0, sy = 0.0;
  int n = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (std::isnan(x[i]) || std::isnan(y[i])) continue;
    sx += x[i];
    sy += y[i];
    ++n;
  }
  if (n_used) *n_used = n;
  if (n < 3) return kNaN;
  double mx = sx / n, my = sy / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (std::isnan(x[i]) || std::isnan(y[i])) continue;
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx <= 0.0 || syy <= 0.0) return kNaN;
  double r = sxy / std::sqrt(sxx * syy);
  return std::clamp(r, -1.0, 1.0);
}

CorrelationMatrix pearson_matrix(const std::vector<std::string>& names,
                                 const std::vector<std::vector<double>>& columns) {
  if (names.size() != columns.size())
    throw InvalidInputError("pearson_matrix: names/columns size mismatch");
  const std::size_t k = names.size();
  CorrelationMatrix m;
  m.labels = names;
  m.r.assign(k * k, kNaN);
  m.p.assign(k * k, kNaN);
  m.n.assign(k * k, 0);
  for (std::size_t i = 0; i < k; ++i) {
    m.r[i * k + i] = 1.0;
    m.p[i * k + i] = 0.0;
    int ni = 0;
    for (double v : columns[i])
      if (!std::isnan(v)) ++ni;
    m.n[i * k + i] = ni;
    for (std::size_t j = i + 1; j < k; ++j) {
      int n = 0;
      double r = pearson_r(columns[i], columns[j], &n);
      m.n[i * k + j] = m.n[j * k + i] = n;
      if (std::isnan(r)) continue;
      double p;
      if (std::fabs(r) >= 1.0) {
        p = 0.0;
      } else {
        double t = r * std::sqrt((n - 2) / (1.0 - r * r));
        p = t_two_sided_p(t, n - 2);
      }
      m.r[i * k + j] = m.r[j * k + i] = r;
      m.p[i * k + j] = m.p[j * k + i] = p;
    }
  }
  return m;
}

AgreementReport exact_agreement(const std::string& rater_a, const std::vector<int>& ratings_a,
                                const std::string& rater_b, const std::vector<int>& ratings_b) {
  if (ratings_a.size() != ratings_b.size())
    throw InvalidInputError("exact_agreement: rating vectors differ in length");
  int n = 0, match = 0;
  for (std::size_t i = 0; i < ratings_a.size(); ++i) {
    if (ratings_a[i] < 0 || ratings_b[i] < 0) continue;
    ++n;
    if (ratings_a[i] == ratings_b[i]) ++match;
  }
  if (n == 0) throw InvalidInputError("exact_agreement: no commonly rated items");
  return {rater_a, rater_b, static_cast<double>(match) / n, n};
}

DisagreementProfile disagreement_profile(const std::vector<std::vector<int>>& ratings_per_item,
                                         const std::vector<std::string>& feature_names,
                                         const std::vector<std::vector<double>>& feature_columns) {
  if (feature_names.size() != feature_columns.size())
    throw InvalidInputError("disagreement_profile: feature names/columns mismatch");
  const std::size_t n_items = ratings_per_item.size();
  DisagreementProfile out;
  out.features = feature_names;
  out.dispersion.assign(n_items, kNaN);
  for (std::size_t i = 0; i < n_items; ++i) {
    const auto& ratings = ratings_per_item[i];
    if (ratings.size() < 2) continue;
    double mean = 0.0;
    for (int v : ratings) mean += v;
    mean /= ratings.size();
    double ss = 0.0;
    for (int v : ratings) ss += (v - mean) * (v - mean);
    out.dispersion[i] = std::sqrt(ss / (ratings.size() - 1));
  }
  for (std::size_t f = 0; f < feature_columns.size(); ++f) {
    if (feature_columns[f].size() != n_items)
      throw InvalidInputError("disagreement_profile: feature column length mismatch");
    int n = 0;
    double r = pearson_r(out.dispersion, feature_columns[f], &n);
    out.r.push_back(r);
    out.n.push_back(n);
    if (std::isnan(r) || std::fabs(r) >= 1.0) {
      out.p.push_back(std::isnan(r) ? kNaN : 0.0);
    } else {
      double t = r * std::sqrt((n - 2) / (1.0 - r * r));
      out.p.push_back(t_two_sided_p(t, n - 2));
    }
  }
  return out;
}

}  // namespace qacal
