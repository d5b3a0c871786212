#include "tiny_denoiser.hpp"

#include <cstdio>
#include <cstring>
#include <fstream>
#include <numeric>

namespace semcom {

namespace {
constexpr char kMagic[8] = {'S', 'C', 'T', 'D', '0', '0', '0', '1'};
}

TinyDenoiser::TinyDenoiser(int latent_dim, int cond_dim, int hidden,
                           const NoiseSchedule* schedule)
    : latent_dim_(latent_dim), cond_dim_(cond_dim), hidden_(hidden),
      schedule_(schedule) {
  if (latent_dim < 1 || cond_dim < 0 || hidden < 1)
    throw ConfigError("bad tiny-denoiser dimensions");
  if (!schedule_) throw ConfigError("tiny denoiser needs a schedule");
  theta_ = Vec::Zero(hidden_ * input_dim() + hidden_ +
                     latent_dim_ * hidden_ + latent_dim_);
}

TinyDenoiser TinyDenoiser::random_init(int latent_dim, int cond_dim, int hidden,
                                       const NoiseSchedule* schedule, Rng& rng) {
  TinyDenoiser m(latent_dim, cond_dim, hidden, schedule);
  double s1 = 1.0 / std::sqrt(static_cast<double>(m.input_dim()));
  double s2 = 1.0 / std::sqrt(static_cast<double>(hidden));
  int n1 = hidden * m.input_dim();
  for (int i = 0; i < n1; ++i) m.theta_[i] = s1 * rng.normal();
  int off = n1 + hidden;  // biases stay zero
  for (int i = 0; i < latent_dim * hidden; ++i) m.theta_[off + i] = s2 * rng.normal();
  return m;
}

Eigen::Map<const Mat> TinyDenoiser::w1() const {
  return {theta_.data(), hidden_, input_dim()};
}
Eigen::Map<const Vec> TinyDenoiser::b1() const {
  return {theta_.data() + hidden_ * input_dim(), hidden_};
}
Eigen::Map<const Mat> TinyDenoiser::w2() const {
  return {theta_.data() + hidden_ * input_dim() + hidden_, latent_dim_, hidden_};
}
Eigen::Map<const Vec> TinyDenoiser::b2() const {
  return {theta_.data() + hidden_ * input_dim() + hidden_ + latent_dim_ * hidden_,
          latent_dim_};
}

Vec TinyDenoiser::build_input(const Vec& z_t, int t, const Condition& cond) const {
  if (z_t.size() != latent_dim_) throw ShapeError("tiny denoiser latent mismatch");
  Vec x = Vec::Zero(input_dim());
  x.head(latent_dim_) = z_t;
  x[latent_dim_] = static_cast<double>(t) / schedule_->steps;
  x[latent_dim_ + 1] = schedule_->sqrt_alpha_bar(t);
  x[latent_dim_ + 2] = schedule_->sqrt_one_minus_alpha_bar(t);
  if (!cond.is_null) {
    if (cond.embedding.size() != cond_dim_)
      throw ShapeError("tiny denoiser condition mismatch");
    x.segment(latent_dim_ + 3, cond_dim_) = cond.embedding;
    x[input_dim() - 1] = 1.0;
  }
  return x;
}

Vec TinyDenoiser::predict_raw(const Vec& z_t, int t, const Condition& cond) const {
  Vec x = build_input(z_t, t, cond);
  Vec h = (w1() * x + b1()).array().tanh();
  return w2() * h + b2();
}

double TinyDenoiser::loss_and_grad(const std::vector<Vec>& z_t,
                                   const std::vector<int>& t,
                                   const std::vector<Condition>& cond,
                                   const std::vector<Vec>& eps_true,
                                   Vec* grad) const {
  const size_t n = z_t.size();
  if (n == 0 || t.size() != n || cond.size() != n || eps_true.size() != n)
    throw ContractError("loss_and_grad: inconsistent batch");

  Mat gw1 = Mat::Zero(hidden_, input_dim());
  Vec gb1 = Vec::Zero(hidden_);
  Mat gw2 = Mat::Zero(latent_dim_, hidden_);
  Vec gb2 = Vec::Zero(latent_dim_);

  double loss = 0.0;
  const double inv = 1.0 / (static_cast<double>(n) * latent_dim_);
  for (size_t i = 0; i < n; ++i) {
    Vec x = build_input(z_t[i], t[i], cond[i]);
    Vec a = w1() * x + b1();
    Vec h = a.array().tanh();
    Vec out = w2() * h + b2();
    Vec r = out - eps_true[i];
    loss += r.squaredNorm() * inv;
    if (!grad) continue;
    Vec dout = 2.0 * inv * r;
    gb2 += dout;
    gw2 += dout * h.transpose();
    Vec dh = w2().transpose() * dout;
    Vec da = dh.array() * (1.0 - h.array().square());
    gb1 += da;
    gw1 += da * x.transpose();
  }
  if (grad) {
    grad->resize(theta_.size());
    int n1 = hidden_ * input_dim();
    std::memcpy(grad->data(), gw1.data(), sizeof(double) * n1);
    std::memcpy(grad->data() + n1, gb1.data(), sizeof(double) * hidden_);
    std::memcpy(grad->data() + n1 + hidden_, gw2.data(),
                sizeof(double) * latent_dim_ * hidden_);
    std::memcpy(grad->data() + n1 + hidden_ + latent_dim_ * hidden_, gb2.data(),
                sizeof(double) * latent_dim_);
  }
  return loss;
}

void TinyDenoiser::save(const std::string& path) const {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw ConfigError("cannot open " + path + " for writing");
  // header: magic, latent_dim, cond_dim, hidden, param_count (int64), then
  // the raw parameter doubles in theta order (W1 row-major-by-Eigen-default,
  // b1, W2, b2 — exactly the packed vector).
  f.write(kMagic, sizeof(kMagic));
  int64_t dims[4] = {latent_dim_, cond_dim_, hidden_, theta_.size()};
  f.write(reinterpret_cast<const char*>(dims), sizeof(dims));
  f.write(reinterpret_cast<const char*>(theta_.data()),
          sizeof(double) * theta_.size());
  if (!f) throw ConfigError("short write to " + path);
}

TinyDenoiser TinyDenoiser::load(const std::string& path,
                                const NoiseSchedule* schedule) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw ConfigError("cannot open model file " + path);
  char magic[8];
  f.read(magic, sizeof(magic));
  if (!f || std::memcmp(magic, kMagic, sizeof(magic)) != 0)
    throw ConfigError("bad model file header in " + path);
  int64_t dims[4];
  f.read(reinterpret_cast<char*>(dims), sizeof(dims));
  if (!f) throw ConfigError("truncated model file " + path);
  TinyDenoiser m(static_cast<int>(dims[0]), static_cast<int>(dims[1]),
                 static_cast<int>(dims[2]), schedule);
  if (dims[3] != m.theta_.size())
    throw ConfigError("model parameter count mismatch in " + path);
  f.read(reinterpret_cast<char*>(m.theta_.data()), sizeof(double) * dims[3]);
  if (!f) throw ConfigError("truncated model parameters in " + path);
  return m;
}

TrainReport train_tiny_denoiser(TinyDenoiser& model, const std::vector<Vec>& data,
                                const std::vector<Vec>& cond_prototypes,
                                const NoiseSchedule& s, const TrainHyper& hyper) {
  if (data.empty()) throw TrainingError("empty training set");
  if (cond_prototypes.size() != data.size())
    throw ContractError("one condition prototype per training sample required");

  Rng rng(mix_seed(hyper.seed, 0x7261696eULL));

  auto draw_batch = [&](int bs, Rng& r, std::vector<Vec>& zt, std::vector<int>& tt,
                        std::vector<Condition>& cc, std::vector<Vec>& ee) {
    zt.clear(); tt.clear(); cc.clear(); ee.clear();
    for (int b = 0; b < bs; ++b) {
      size_t i = static_cast<size_t>(r.uniform() * data.size());
      if (i >= data.size()) i = data.size() - 1;
      int t = 1 + static_cast<int>(r.uniform() * s.steps);
      if (t > s.steps) t = s.steps;
      Vec eps = r.normal_vec(data[i].size());
      zt.push_back(forward_marginal(s, data[i], t, eps));
      tt.push_back(t);
      bool drop = r.uniform() < hyper.cond_dropout;
      cc.push_back(drop ? Condition::null_condition()
                        : Condition::from(cond_prototypes[i]));
      ee.push_back(std::move(eps));
    }
  };

  std::vector<Vec> zt, ee;
  std::vector<int> tt;
  std::vector<Condition> cc;

  // fixed held-out batch for the per-epoch trend
  Rng hold_rng(mix_seed(hyper.seed, 0x686f6c64ULL));
  std::vector<Vec> hzt, hee;
  std::vector<int> htt;
  std::vector<Condition> hcc;
  draw_batch(std::max(hyper.batch_size, 64), hold_rng, hzt, htt, hcc, hee);

  TrainReport report;
  report.initial_loss = model.loss_and_grad(hzt, htt, hcc, hee, nullptr);

  Vec grad;
  int batches_per_epoch =
      std::max<int>(1, static_cast<int>(data.size() / hyper.batch_size));
  for (int epoch = 0; epoch < hyper.epochs; ++epoch) {
    double epoch_loss = 0.0;
    for (int b = 0; b < batches_per_epoch; ++b) {
      draw_batch(hyper.batch_size, rng, zt, tt, cc, ee);
      double loss = model.loss_and_grad(zt, tt, cc, ee, &grad);
      model.params() -= hyper.learning_rate * grad;
      epoch_loss += loss;
    }
    epoch_loss /= batches_per_epoch;
    report.epoch_losses.push_back(epoch_loss);
    double hold = model.loss_and_grad(hzt, htt, hcc, hee, nullptr);
    report.holdout_losses.push_back(hold);
    if (!std::isfinite(epoch_loss) || epoch_loss > 10.0 * report.initial_loss + 1e-12)
      throw TrainingError("training diverged at epoch " + std::to_string(epoch) +
                          " (loss " + std::to_string(epoch_loss) + ", initial " +
                          std::to_string(report.initial_loss) + ")");
  }
  report.final_loss = model.loss_and_grad(hzt, htt, hcc, hee, nullptr);
  return report;
}

}  // namespace semcom
