#include "poselift/dict.hpp"

#include <cmath>
#include <random>

#include "poselift/solvers.hpp"

namespace poselift {

namespace {

double lambda_max_gram(const Eigen::MatrixXd& b) {
  Eigen::VectorXd v = Eigen::VectorXd::Ones(b.cols()).normalized();
  double lam = 0.0;
  for (int i = 0; i < 60; ++i) {
    Eigen::VectorXd w = b.transpose() * (b * v);
    double nw = w.norm();
    if (nw < 1e-300) return 0.0;
    v = w / nw;
    lam = nw;
  }
  return lam;
}

// one l1 coding problem per pose; warm-started, solved by the shared APG
void code_batch(const Eigen::MatrixXd& b, const Eigen::MatrixXd& x, double alpha,
                const Hyperparams& hyper, Eigen::MatrixXd& codes) {
  ApgOptions opt;
  opt.max_iter = hyper.apg_max_iter;
  opt.tol = hyper.apg_tol;
  opt.l1_weight = alpha;
  opt.lipschitz = 1.02 * lambda_max_gram(b) + 1e-12;
  for (int j = 0; j < x.cols(); ++j) {
    Eigen::VectorXd target = x.col(j);
    auto f = [&](const Eigen::VectorXd& c) { return 0.5 * (target - b * c).squaredNorm(); };
    auto grad = [&](const Eigen::VectorXd& c, Eigen::VectorXd& g) {
      g.noalias() = -b.transpose() * (target - b * c);
    };
    Eigen::VectorXd cj = codes.col(j);
    apg_l1_minimize(f, grad, opt, cj);
    codes.col(j) = cj;
  }
}

double batch_objective(const Eigen::MatrixXd& b, const Eigen::MatrixXd& x,
                       const Eigen::MatrixXd& codes, double alpha) {
  double acc = 0.0;
  for (int j = 0; j < x.cols(); ++j) acc += 0.5 * (x.col(j) - b * codes.col(j)).squaredNorm();
  return acc + alpha * codes.lpNorm<1>();
}

}  // namespace

TrainingPoses preprocess(const std::vector<Pose3>& raw, const Skeleton& skeleton) {
  skeleton.validate();
  if (raw.empty()) throw LearnError("empty training set");
  const int p = skeleton.joint_count;
  TrainingPoses out;
  out.skeleton = skeleton;
  out.poses.reserve(raw.size());

  int degenerate = 0;
  double length_sum = 0.0;
  long length_count = 0;
  for (size_t i = 0; i < raw.size(); ++i) {
    if (raw[i].cols() != p)
      throw DataError("training pose " + std::to_string(i) + " has the wrong joint count");
    Pose3 s = raw[i];
    s.colwise() -= Eigen::Vector3d(raw[i].col(skeleton.root_index));
    bool bad = false;
    for (const auto& [a, b] : skeleton.edges) {
      const double len = (s.col(a) - s.col(b)).norm();
      if (len < 1e-9) bad = true;
      length_sum += len;
      ++length_count;
    }
    if (bad) ++degenerate;
    out.poses.push_back(std::move(s));
  }
  if (degenerate > 0.01 * static_cast<double>(raw.size()))
    throw LearnError("batch rejected: " + std::to_string(degenerate) + " of " +
                     std::to_string(raw.size()) + " poses carry zero-length bones");
  out.mean_limb_length = length_count > 0 ? length_sum / length_count : 0.0;
  return out;
}

PoseDictionary learn_dictionary(const TrainingPoses& train, int k, const Hyperparams& hyper,
                                std::uint64_t seed, LearnReport* report) {
  hyper.validate();
  if (k <= 0) throw DataError("dictionary size must be positive");
  const int m = train.pose_count();
  if (m == 0) throw LearnError("empty training set");
  const int p = train.skeleton.joint_count;
  const int d = 3 * p;

  Eigen::MatrixXd x(d, m);
  for (int j = 0; j < m; ++j)
    x.col(j) = Eigen::Map<const Eigen::VectorXd>(train.poses[j].data(), d);

  LearnReport rep;
  rep.size_warning = m < k;

  // atoms start as sampled training poses, pulled into the unit ball
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> pick(0, m - 1);
  Eigen::MatrixXd b(d, k);
  for (int i = 0; i < k; ++i) {
    Eigen::VectorXd cand = x.col(pick(rng));
    const double nrm = cand.norm();
    b.col(i) = nrm > 1.0 ? (cand / nrm).eval() : cand;
  }

  Eigen::MatrixXd codes = Eigen::MatrixXd::Zero(k, m);
  double f_prev = 0.0;
  bool have_prev = false;
  for (int round = 0; round < hyper.dict_rounds; ++round) {
    code_batch(b, x, hyper.alpha, hyper, codes);
    const double f = batch_objective(b, x, codes, hyper.alpha);
    rep.rounds = round + 1;
    if (have_prev && f > f_prev + 1e-9 * std::max(1.0, std::abs(f_prev)))
      throw SolverError("training objective rose across rounds: " + std::to_string(f_prev) +
                        " -> " + std::to_string(f));
    if (have_prev && std::abs(f_prev - f) / std::max(1.0, std::abs(f_prev)) < 1e-4) {
      rep.objective = f;
      break;
    }
    f_prev = f;
    have_prev = true;
    rep.objective = f;
    if (round + 1 == hyper.dict_rounds) break;

    // per-atom constrained least squares; the quadratic is isotropic in each
    // atom, so projecting the unconstrained optimum onto the ball is exact
    Eigen::MatrixXd res = x - b * codes;
    for (int i = 0; i < k; ++i) {
      const Eigen::RowVectorXd ci = codes.row(i);
      const double nrm2 = ci.squaredNorm();
      if (nrm2 == 0.0) {
        // dead atom: restart from the pose the dictionary fits worst;
        // its codes are zero so the objective is untouched
        int worst = 0;
        double worst_err = -1.0;
        for (int j = 0; j < m; ++j) {
          const double e = res.col(j).squaredNorm();
          if (e > worst_err) {
            worst_err = e;
            worst = j;
          }
        }
        Eigen::VectorXd cand = x.col(worst);
        const double nrm = cand.norm();
        b.col(i) = nrm > 1.0 ? (cand / nrm).eval() : cand;
        ++rep.reseeded;
        continue;
      }
      Eigen::MatrixXd ei = res + b.col(i) * ci;
      Eigen::VectorXd atom = (ei * ci.transpose()) / nrm2;
      const double nrm = atom.norm();
      if (nrm > 1.0) atom /= nrm;
      res = ei - atom * ci;
      b.col(i) = atom;
    }
  }

  double err = 0.0;
  for (int j = 0; j < m; ++j) err += (x.col(j) - b * codes.col(j)).norm();
  rep.train_error = err / m;

  PoseDictionary dict;
  dict.skeleton = train.skeleton;
  dict.atom_scale = 1.0;
  dict.mean_limb_length = train.mean_limb_length;
  dict.atoms.resize(k);
  for (int i = 0; i < k; ++i)
    dict.atoms[i] = Eigen::Map<const Pose3>(b.col(i).data(), 3, p);

  const Eigen::VectorXd mean = x.rowwise().mean();
  dict.mean_pose_code =
      b.jacobiSvd(Eigen::ComputeThinU | Eigen::ComputeThinV).solve(mean);

  if (report) *report = rep;
  return dict;
}

Eigen::VectorXd sparse_code(const Pose3& pose, const PoseDictionary& dict, double alpha) {
  dict.validate();
  if (pose.cols() != dict.skeleton.joint_count)
    throw DataError("pose joint count does not match the dictionary");
  if (alpha < 0) throw DataError("alpha must be >= 0");
  const Eigen::MatrixXd b = dict.atom_matrix();
  const Eigen::VectorXd target = Eigen::Map<const Eigen::VectorXd>(pose.data(), pose.size());

  ApgOptions opt;
  opt.max_iter = 2000;
  opt.tol = 1e-12;
  opt.l1_weight = alpha;
  opt.lipschitz = 1.02 * lambda_max_gram(b) + 1e-12;
  auto f = [&](const Eigen::VectorXd& c) { return 0.5 * (target - b * c).squaredNorm(); };
  auto grad = [&](const Eigen::VectorXd& c, Eigen::VectorXd& g) {
    g.noalias() = -b.transpose() * (target - b * c);
  };
  Eigen::VectorXd c = Eigen::VectorXd::Zero(dict.atom_count());
  apg_l1_minimize(f, grad, opt, c);
  return c;
}

}  // namespace poselift
