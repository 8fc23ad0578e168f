#include "swsim/modelspec.hpp"

#include <algorithm>
#include <map>
#include <sstream>

namespace swsim {

ModelFormulation formulation(int id) {
  using T = FixedTerm;
  ModelFormulation f;
  f.id = id;
  switch (id) {
    case 1: f.terms = {T::intercept, T::exposure}; break;
    case 2: f.terms = {T::intercept, T::exposure, T::baseline_age, T::baseline_widowed}; break;
    case 3: f.terms = {T::intercept, T::exposure, T::age, T::widowed}; break;
    case 4: f.terms = {T::intercept, T::exposure, T::period}; break;
    case 5:
      f.terms = {T::intercept, T::exposure, T::period, T::baseline_age, T::baseline_widowed};
      break;
    case 6: f.terms = {T::intercept, T::exposure, T::period, T::age, T::widowed}; break;
    default: throw std::invalid_argument("model id must be in 1..6, got " + std::to_string(id));
  }
  return f;
}

std::vector<int> parse_model_ids(const std::string& text) {
  std::vector<int> ids;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t used = 0;
    int id = 0;
    try {
      id = std::stoi(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != item.size() || id < 1 || id > 6)
      throw std::invalid_argument("invalid model id '" + item + "'");
    ids.push_back(id);
  }
  if (ids.empty()) throw std::invalid_argument("no model ids given");
  return ids;
}

int ModelMatrices::column(const std::string& label) const {
  auto it = std::find(labels.begin(), labels.end(), label);
  return it == labels.end() ? -1 : static_cast<int>(it - labels.begin());
}

namespace {

void check_rank(const Eigen::MatrixXd& X, const std::vector<std::string>& labels) {
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(X);
  qr.setThreshold(1e-10);
  if (qr.rank() == X.cols()) return;
  std::vector<std::string> collinear;
  const auto& perm = qr.colsPermutation().indices();
  for (Eigen::Index c = qr.rank(); c < X.cols(); ++c) collinear.push_back(labels[perm[c]]);
  std::sort(collinear.begin(), collinear.end());
  std::string what = "fixed-effect design is rank deficient; collinear column(s):";
  for (const auto& c : collinear) what += " " + c;
  throw RankDeficientError(std::move(collinear), what);
}

}  // namespace

ModelMatrices make_matrices(Eigen::VectorXd y, Eigen::MatrixXd X, std::vector<int> cluster,
                            std::vector<int> participant, std::vector<std::string> labels) {
  const auto n = static_cast<std::size_t>(y.size());
  if (n == 0) throw std::invalid_argument("no observations");
  if (static_cast<std::size_t>(X.rows()) != n || cluster.size() != n || participant.size() != n)
    throw std::invalid_argument("row counts of y, X and membership vectors differ");
  if (labels.size() != static_cast<std::size_t>(X.cols()))
    throw std::invalid_argument("one label per column of X is required");

  ModelMatrices m;
  m.n_clusters = *std::max_element(cluster.begin(), cluster.end()) + 1;
  m.n_participants = *std::max_element(participant.begin(), participant.end()) + 1;
  std::vector<int> owner(m.n_participants, -1);
  for (std::size_t r = 0; r < n; ++r) {
    if (cluster[r] < 0 || participant[r] < 0) throw std::invalid_argument("negative group index");
    int& o = owner[participant[r]];
    if (o >= 0 && o != cluster[r])
      throw std::invalid_argument("participant " + std::to_string(participant[r]) +
                                  " appears in more than one cluster");
    o = cluster[r];
  }
  m.y = std::move(y);
  m.X = std::move(X);
  m.cluster = std::move(cluster);
  m.participant = std::move(participant);
  m.labels = std::move(labels);
  return m;
}

ModelMatrices build_matrices(const ObservationTable& table, const ModelFormulation& formulation) {
  if (table.empty()) throw std::invalid_argument("observation table is empty");
  const int n_steps = table.max_period();

  std::vector<std::string> labels;
  for (auto term : formulation.terms) {
    switch (term) {
      case FixedTerm::intercept: labels.push_back("(Intercept)"); break;
      case FixedTerm::exposure: labels.push_back("exposed"); break;
      case FixedTerm::period:
        for (int j = 1; j <= n_steps; ++j) labels.push_back("period" + std::to_string(j));
        break;
      case FixedTerm::baseline_age: labels.push_back("baseline_age"); break;
      case FixedTerm::baseline_widowed: labels.push_back("baseline_widowed"); break;
      case FixedTerm::age: labels.push_back("age"); break;
      case FixedTerm::widowed: labels.push_back("widowed"); break;
    }
  }

  const auto n = static_cast<Eigen::Index>(table.size());
  Eigen::MatrixXd X = Eigen::MatrixXd::Zero(n, static_cast<Eigen::Index>(labels.size()));
  Eigen::VectorXd y(n);
  std::vector<int> cluster(n), participant(n);
  std::map<std::pair<int, int>, int> participant_index;

  for (Eigen::Index r = 0; r < n; ++r) {
    const auto& o = table.rows[r];
    y[r] = o.outcome;
    cluster[r] = o.cluster;
    auto [it, inserted] = participant_index.try_emplace(
        {o.cluster, o.participant}, static_cast<int>(participant_index.size()));
    participant[r] = it->second;

    Eigen::Index c = 0;
    for (auto term : formulation.terms) {
      switch (term) {
        case FixedTerm::intercept: X(r, c++) = 1.0; break;
        case FixedTerm::exposure: X(r, c++) = o.exposed ? 1.0 : 0.0; break;
        case FixedTerm::period:
          for (int j = 1; j <= n_steps; ++j) X(r, c++) = o.period == j ? 1.0 : 0.0;
          break;
        case FixedTerm::baseline_age: X(r, c++) = o.baseline_age; break;
        case FixedTerm::baseline_widowed: X(r, c++) = o.baseline_widowed ? 1.0 : 0.0; break;
        case FixedTerm::age: X(r, c++) = o.age; break;
        case FixedTerm::widowed: X(r, c++) = o.widowed ? 1.0 : 0.0; break;
      }
    }
  }
  check_rank(X, labels);
  return make_matrices(std::move(y), std::move(X), std::move(cluster), std::move(participant),
                       std::move(labels));
}

}  // namespace swsim
