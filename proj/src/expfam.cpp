#include "gm/expfam.hpp"

#include <cmath>

namespace gm {

// ---------------------------------------------------------------------------
// special functions

double digamma(double x) {
  if (x <= 0.0 && x == std::floor(x)) throw NumericError("digamma pole");
  double result = 0.0;
  while (x < 6.0) {
    result -= 1.0 / x;
    x += 1.0;
  }
  double inv = 1.0 / x, inv2 = inv * inv;
  result += std::log(x) - 0.5 * inv -
            inv2 * (1.0 / 12.0 - inv2 * (1.0 / 120.0 - inv2 * (1.0 / 252.0 - inv2 / 240.0)));
  return result;
}

double log_beta(const VectorXd& a) {
  double s = 0.0, tot = 0.0;
  for (int i = 0; i < a.size(); ++i) {
    if (a[i] <= 0.0) throw NumericError("log Beta needs positive arguments");
    s += std::lgamma(a[i]);
    tot += a[i];
  }
  return s - std::lgamma(tot);
}

double lgamma_d(int d, double a) {
  if (a <= 0.5 * (d - 1)) throw NumericError("multivariate gamma undefined");
  double s = 0.25 * d * (d - 1) * std::log(M_PI);
  for (int i = 1; i <= d; ++i) s += std::lgamma(a + 0.5 * (1 - i));
  return s;
}

namespace {

constexpr double kLog2Pi = 1.8378770664093454836;

// log determinant of a symmetric positive definite matrix; throws otherwise
double logdet_spd(const MatrixXd& m, const char* what) {
  Eigen::LLT<MatrixXd> llt(m);
  if (llt.info() != Eigen::Success)
    throw NumericError(std::string(what) + ": matrix is not positive definite");
  double ld = 0.0;
  for (int i = 0; i < m.rows(); ++i) ld += std::log(llt.matrixL()(i, i));
  return 2.0 * ld;
}

}  // namespace

// ---------------------------------------------------------------------------
// densities

double bernoulli_logpdf(double p, int x) {
  if (p <= 0.0 || p >= 1.0) {
    if ((p == 0.0 && x == 0) || (p == 1.0 && x == 1)) return 0.0;
    if (p < 0.0 || p > 1.0) throw NumericError("Bernoulli parameter outside [0,1]");
    return kNegInf;
  }
  return x ? std::log(p) : std::log1p(-p);
}

double multinomial_logpdf(const VectorXd& theta, int x) {
  if (x < 0 || x >= theta.size()) return kNegInf;
  double p = theta[x];
  return p > 0.0 ? std::log(p) : kNegInf;
}

double beta_logpdf(double a, double b, double theta) {
  if (theta <= 0.0 || theta >= 1.0) return kNegInf;
  VectorXd ab(2);
  ab << a, b;
  return (a - 1.0) * std::log(theta) + (b - 1.0) * std::log1p(-theta) - log_beta(ab);
}

double dirichlet_logpdf(const VectorXd& alpha, const VectorXd& theta) {
  if (alpha.size() != theta.size()) throw ModelError("Dirichlet dimension mismatch");
  double s = -log_beta(alpha);
  for (int i = 0; i < alpha.size(); ++i) {
    if (theta[i] <= 0.0) return kNegInf;
    s += (alpha[i] - 1.0) * std::log(theta[i]);
  }
  return s;
}

double gaussian_logpdf(double mean, double sd, double x) {
  if (!(sd > 0.0)) throw NumericError("Gaussian needs positive sd");
  double z = (x - mean) / sd;
  return -0.5 * z * z - std::log(sd) - 0.5 * kLog2Pi;
}

double gaussian_linear_logpdf(const VectorXd& theta, double lam, const VectorXd& b, double y) {
  if (!(lam > 0.0)) throw NumericError("linear-Gaussian needs positive precision");
  if (theta.size() != b.size()) throw ModelError("basis/coefficient dimension mismatch");
  double r = y - theta.dot(b);
  return 0.5 * std::log(lam) - 0.5 * kLog2Pi - 0.5 * lam * r * r;
}

double gamma_logpdf(double shape, double rate, double x) {
  if (!(shape > 0.0) || !(rate > 0.0)) throw NumericError("Gamma needs positive parameters");
  if (x <= 0.0) return kNegInf;
  return shape * std::log(rate) - std::lgamma(shape) + (shape - 1.0) * std::log(x) - rate * x;
}

double mv_gaussian_logpdf(const VectorXd& mean, const MatrixXd& precision, const VectorXd& x) {
  int d = static_cast<int>(mean.size());
  if (x.size() != d || precision.rows() != d || precision.cols() != d)
    throw ModelError("multivariate Gaussian dimension mismatch");
  VectorXd r = x - mean;
  return 0.5 * logdet_spd(precision, "mv-gaussian precision") - 0.5 * d * kLog2Pi -
         0.5 * r.dot(precision * r);
}

double wishart_logpdf(double dof, const MatrixXd& scale, const MatrixXd& x) {
  int d = static_cast<int>(scale.rows());
  if (dof < d) throw NumericError("Wishart dof below dimension");
  double ld_scale = logdet_spd(scale, "Wishart scale");
  double ld_x;
  Eigen::LLT<MatrixXd> llt(x);
  if (llt.info() != Eigen::Success) return kNegInf;
  ld_x = 0.0;
  for (int i = 0; i < d; ++i) ld_x += 2.0 * std::log(llt.matrixL()(i, i));
  double tr = scale.llt().solve(x).trace();
  return -0.5 * dof * ld_scale + 0.5 * (dof - d - 1) * ld_x - 0.5 * dof * d * std::log(2.0) -
         lgamma_d(d, 0.5 * dof) - 0.5 * tr;
}

// ---------------------------------------------------------------------------
// statistics

int FamilyDescriptor::stat_dim() const {
  switch (kind) {
    case Conjugacy::DirichletMultinomial: return dim;
    case Conjugacy::GaussianKnownSd: return 2;
    case Conjugacy::NormalGamma: return dim * (dim + 1) / 2 + dim + 1;
    case Conjugacy::GammaRate: return 1;
    case Conjugacy::NormalWishart: return dim + dim * (dim + 1) / 2;
  }
  return 0;
}

SufficientStats zero_stats(const FamilyDescriptor& fam) {
  SufficientStats s;
  s.kind = fam.kind;
  switch (fam.kind) {
    case Conjugacy::DirichletMultinomial: s.counts = VectorXd::Zero(fam.dim); break;
    case Conjugacy::GaussianKnownSd: break;
    case Conjugacy::NormalGamma:
      s.S = MatrixXd::Zero(fam.dim, fam.dim);
      s.q = VectorXd::Zero(fam.dim);
      break;
    case Conjugacy::GammaRate: break;
    case Conjugacy::NormalWishart:
      s.vsum = VectorXd::Zero(fam.dim);
      s.vsum2 = MatrixXd::Zero(fam.dim, fam.dim);
      break;
  }
  return s;
}

void accumulate(const FamilyDescriptor& fam, SufficientStats& stats, const Obs& obs,
                double weight) {
  if (!(weight >= 0.0) || !std::isfinite(weight))
    throw NumericError("statistic weights must be finite and non-negative");
  if (stats.kind != fam.kind) throw ModelError("statistics family mismatch");
  if (weight == 0.0) return;
  switch (fam.kind) {
    case Conjugacy::DirichletMultinomial: {
      int x = as_index(obs.x);
      if (x < 0 || x >= fam.dim)
        throw ModelError("category value " + std::to_string(x) + " outside support");
      stats.counts[x] += weight;
      break;
    }
    case Conjugacy::GaussianKnownSd: {
      double x = as_scalar(obs.x);
      check_finite(x, "gaussian observation");
      stats.sx += weight * x;
      stats.sxx += weight * x * x;
      break;
    }
    case Conjugacy::NormalGamma: {
      double y = as_scalar(obs.x);
      check_finite(y, "regression response");
      if (obs.basis.size() != fam.dim) throw ModelError("basis dimension mismatch");
      stats.S += weight * obs.basis * obs.basis.transpose();
      stats.q += weight * y * obs.basis;
      stats.ysq += weight * y * y;
      break;
    }
    case Conjugacy::GammaRate: {
      double x = as_scalar(obs.x);
      if (!(x > 0.0)) throw ModelError("Gamma observation must be positive");
      stats.sum_x += weight * x;
      stats.sum_logx += weight * std::log(x);
      break;
    }
    case Conjugacy::NormalWishart: {
      const VectorXd& x = as_vector(obs.x);
      if (x.size() != fam.dim) throw ModelError("vector observation dimension mismatch");
      stats.vsum += weight * x;
      stats.vsum2 += weight * x * x.transpose();
      break;
    }
  }
  stats.n += weight;
}

void merge(SufficientStats& into, const SufficientStats& other) {
  if (into.kind != other.kind) throw ModelError("cannot merge statistics of different families");
  into.n += other.n;
  switch (into.kind) {
    case Conjugacy::DirichletMultinomial: into.counts += other.counts; break;
    case Conjugacy::GaussianKnownSd:
      into.sx += other.sx;
      into.sxx += other.sxx;
      break;
    case Conjugacy::NormalGamma:
      into.S += other.S;
      into.q += other.q;
      into.ysq += other.ysq;
      break;
    case Conjugacy::GammaRate:
      into.sum_x += other.sum_x;
      into.sum_logx += other.sum_logx;
      break;
    case Conjugacy::NormalWishart:
      into.vsum += other.vsum;
      into.vsum2 += other.vsum2;
      break;
  }
}

// ---------------------------------------------------------------------------
// conjugate updates

void ConjugateParams::validate() const {
  switch (kind) {
    case Conjugacy::DirichletMultinomial:
      for (int i = 0; i < alpha.size(); ++i)
        if (!(alpha[i] > 0.0)) throw NumericError("Dirichlet pseudo-counts must be positive");
      break;
    case Conjugacy::GaussianKnownSd:
      if (!(tau0 > 0.0) || !(known_sd > 0.0))
        throw NumericError("Gaussian prior needs positive precisions");
      break;
    case Conjugacy::NormalGamma:
      if (!(a0 > 0.0) || !(b0 > 0.0)) throw NumericError("Gamma prior needs positive shape/rate");
      logdet_spd(prec_scale, "prior coefficient precision");
      break;
    case Conjugacy::GammaRate:
      if (!(g_shape > 0.0) || !(g_rate > 0.0) || !(like_shape > 0.0))
        throw NumericError("Gamma parameters must be positive");
      break;
    case Conjugacy::NormalWishart:
      if (!(kappa0 > 0.0)) throw NumericError("prior mean count must be positive");
      if (!(dof0 > static_cast<double>(mu0.size()) - 1.0))
        throw NumericError("Wishart dof too small");
      logdet_spd(rate0, "Wishart prior rate");
      break;
  }
}

ConjugateParams posterior(const ConjugateParams& prior, const SufficientStats& stats) {
  if (prior.kind != stats.kind) throw ModelError("prior/statistics family mismatch");
  prior.validate();
  ConjugateParams post = prior;
  switch (prior.kind) {
    case Conjugacy::DirichletMultinomial:
      if (prior.alpha.size() != stats.counts.size())
        throw ModelError("category count mismatch");
      post.alpha = prior.alpha + stats.counts;
      break;
    case Conjugacy::GaussianKnownSd: {
      double tau_like = 1.0 / (prior.known_sd * prior.known_sd);
      post.tau0 = prior.tau0 + stats.n * tau_like;
      post.m0 = (prior.tau0 * prior.m0 + tau_like * stats.sx) / post.tau0;
      break;
    }
    case Conjugacy::NormalGamma: {
      MatrixXd prec_n = prior.prec_scale + stats.S;
      Eigen::LDLT<MatrixXd> ldlt(prec_n);
      if (ldlt.info() != Eigen::Success)
        throw NumericError("posterior coefficient precision is not positive definite");
      VectorXd theta_n = ldlt.solve(prior.prec_scale * prior.theta0 + stats.q);
      double resid = stats.ysq - 2.0 * theta_n.dot(stats.q) + theta_n.dot(stats.S * theta_n);
      VectorXd dtheta = theta_n - prior.theta0;
      double prior_quad = dtheta.dot(prior.prec_scale * dtheta);
      double incr = resid + prior_quad;
      if (incr < 0.0) {
        if (incr < -1e-8 * (std::abs(stats.ysq) + 1.0))
          throw NumericError("negative residual in conjugate regression update");
        incr = 0.0;
      }
      post.prec_scale = prec_n;
      post.theta0 = theta_n;
      post.a0 = prior.a0 + 0.5 * stats.n;
      post.b0 = prior.b0 + 0.5 * incr;
      break;
    }
    case Conjugacy::GammaRate:
      post.g_shape = prior.g_shape + stats.n * prior.like_shape;
      post.g_rate = prior.g_rate + stats.sum_x;
      break;
    case Conjugacy::NormalWishart: {
      double kappa_n = prior.kappa0 + stats.n;
      VectorXd mu_n = (prior.kappa0 * prior.mu0 + stats.vsum) / kappa_n;
      MatrixXd rate_n = prior.rate0 + stats.vsum2 +
                        prior.kappa0 * prior.mu0 * prior.mu0.transpose() -
                        kappa_n * mu_n * mu_n.transpose();
      rate_n = 0.5 * (rate_n + rate_n.transpose());
      post.kappa0 = kappa_n;
      post.mu0 = mu_n;
      post.dof0 = prior.dof0 + stats.n;
      post.rate0 = rate_n;
      break;
    }
  }
  return post;
}

double log_evidence(const ConjugateParams& prior, const SufficientStats& stats) {
  if (prior.kind != stats.kind) throw ModelError("prior/statistics family mismatch");
  prior.validate();
  if (stats.n == 0.0) return 0.0;
  double le = 0.0;
  switch (prior.kind) {
    case Conjugacy::DirichletMultinomial:
      le = log_beta(prior.alpha + stats.counts) - log_beta(prior.alpha);
      break;
    case Conjugacy::GaussianKnownSd: {
      ConjugateParams post = posterior(prior, stats);
      double tau_like = 1.0 / (prior.known_sd * prior.known_sd);
      le = -0.5 * stats.n * (kLog2Pi - std::log(tau_like)) +
           0.5 * (std::log(prior.tau0) - std::log(post.tau0)) -
           0.5 * (tau_like * stats.sxx + prior.tau0 * prior.m0 * prior.m0 -
                  post.tau0 * post.m0 * post.m0);
      break;
    }
    case Conjugacy::NormalGamma: {
      ConjugateParams post = posterior(prior, stats);
      le = -0.5 * stats.n * kLog2Pi +
           0.5 * (logdet_spd(prior.prec_scale, "prior precision") -
                  logdet_spd(post.prec_scale, "posterior precision")) +
           std::lgamma(post.a0) - std::lgamma(prior.a0) + prior.a0 * std::log(prior.b0) -
           post.a0 * std::log(post.b0);
      break;
    }
    case Conjugacy::GammaRate: {
      double a = prior.like_shape;
      double an = prior.g_shape + stats.n * a;
      le = std::lgamma(an) - std::lgamma(prior.g_shape) + prior.g_shape * std::log(prior.g_rate) -
           an * std::log(prior.g_rate + stats.sum_x) + (a - 1.0) * stats.sum_logx -
           stats.n * std::lgamma(a);
      break;
    }
    case Conjugacy::NormalWishart: {
      ConjugateParams post = posterior(prior, stats);
      int d = static_cast<int>(prior.mu0.size());
      le = -0.5 * d * stats.n * std::log(M_PI) +
           0.5 * d * (std::log(prior.kappa0) - std::log(post.kappa0)) +
           lgamma_d(d, 0.5 * post.dof0) - lgamma_d(d, 0.5 * prior.dof0) +
           0.5 * prior.dof0 * logdet_spd(prior.rate0, "prior rate") -
           0.5 * post.dof0 * logdet_spd(post.rate0, "posterior rate");
      break;
    }
  }
  check_finite(le, "log evidence");
  return le;
}

// ---------------------------------------------------------------------------
// summaries

Value posterior_summary(const ConjugateParams& post, const SummaryRequest& req) {
  using Kind = SummaryRequest::Kind;
  post.validate();
  switch (post.kind) {
    case Conjugacy::DirichletMultinomial: {
      double tot = post.alpha.sum();
      int c = static_cast<int>(post.alpha.size());
      switch (req.kind) {
        case Kind::Mean: return VectorXd(post.alpha / tot);
        case Kind::Mode: {
          for (int i = 0; i < c; ++i)
            if (post.alpha[i] < 1.0)
              throw NumericError("Dirichlet mode undefined with pseudo-counts below 1");
          if (tot == static_cast<double>(c)) return VectorXd::Constant(c, 1.0 / c).eval();
          return VectorXd((post.alpha.array() - 1.0) / (tot - c));
        }
        case Kind::MomentOfT:
        case Kind::LogMoment:
          return digamma(post.alpha[req.index]) - digamma(tot);
      }
      break;
    }
    case Conjugacy::GaussianKnownSd:
      switch (req.kind) {
        case Kind::Mean:
        case Kind::Mode: return post.m0;
        case Kind::MomentOfT:
          // posterior statistics of the mean parameter: (mu, mu^2)
          return req.index == 0 ? post.m0 : post.m0 * post.m0 + 1.0 / post.tau0;
        case Kind::LogMoment: throw NumericError("log-moment undefined for a Gaussian mean");
      }
      break;
    case Conjugacy::NormalGamma:
      if (req.part == 0) {
        switch (req.kind) {
          case Kind::Mean:
          case Kind::Mode: return post.theta0;
          default: throw NumericError("unsupported coefficient summary");
        }
      } else {
        switch (req.kind) {
          case Kind::Mean: return post.a0 / post.b0;  // E[precision]
          case Kind::Mode:
            if (post.a0 < 1.0) throw NumericError("precision mode undefined");
            return (post.a0 - 1.0) / post.b0;
          case Kind::MomentOfT:
          case Kind::LogMoment: return digamma(post.a0) - std::log(post.b0);
        }
      }
      break;
    case Conjugacy::GammaRate:
      switch (req.kind) {
        case Kind::Mean: return post.g_shape / post.g_rate;
        case Kind::Mode:
          if (post.g_shape < 1.0) throw NumericError("rate mode undefined");
          return (post.g_shape - 1.0) / post.g_rate;
        case Kind::MomentOfT:
        case Kind::LogMoment: return digamma(post.g_shape) - std::log(post.g_rate);
      }
      break;
    case Conjugacy::NormalWishart: {
      int d = static_cast<int>(post.mu0.size());
      if (req.part == 0) {
        switch (req.kind) {
          case Kind::Mean:
          case Kind::Mode: return post.mu0;
          default: throw NumericError("unsupported mean summary");
        }
      } else {
        MatrixXd scale = post.rate0.llt().solve(MatrixXd::Identity(d, d));
        switch (req.kind) {
          case Kind::Mean: return MatrixXd(post.dof0 * scale);
          case Kind::Mode:
            if (post.dof0 <= d + 1) throw NumericError("precision mode undefined");
            return MatrixXd((post.dof0 - d - 1) * scale);
          default: throw NumericError("unsupported precision summary");
        }
      }
    }
  }
  throw NumericError("unsupported summary request");
}

// ---------------------------------------------------------------------------
// sampling

namespace {

MatrixXd wishart_draw(double dof, const MatrixXd& scale, Rng& rng) {
  int d = static_cast<int>(scale.rows());
  Eigen::LLT<MatrixXd> llt(scale);
  if (llt.info() != Eigen::Success) throw NumericError("Wishart scale not positive definite");
  MatrixXd L = llt.matrixL();
  MatrixXd A = MatrixXd::Zero(d, d);
  for (int i = 0; i < d; ++i) {
    A(i, i) = std::sqrt(rng.gamma(0.5 * (dof - i), 0.5));
    for (int j = 0; j < i; ++j) A(i, j) = rng.normal();
  }
  MatrixXd LA = L * A;
  return LA * LA.transpose();
}

}  // namespace

ParamDraw sample_param(const ConjugateParams& post, Rng& rng) {
  post.validate();
  ParamDraw out;
  switch (post.kind) {
    case Conjugacy::DirichletMultinomial: {
      VectorXd t = rng.dirichlet(post.alpha);
      out.primary = t;
      break;
    }
    case Conjugacy::GaussianKnownSd:
      out.primary = post.m0 + rng.normal() / std::sqrt(post.tau0);
      break;
    case Conjugacy::NormalGamma: {
      double lam = rng.gamma(post.a0, post.b0);
      Eigen::LLT<MatrixXd> llt(post.prec_scale);
      if (llt.info() != Eigen::Success)
        throw NumericError("coefficient precision not positive definite");
      VectorXd z(post.theta0.size());
      for (int i = 0; i < z.size(); ++i) z[i] = rng.normal();
      // cov = (lam * L L^T)^-1, so theta = theta0 + L^-T z / sqrt(lam)
      VectorXd theta =
          post.theta0 + llt.matrixU().solve(z) / std::sqrt(lam);
      out.primary = theta;
      out.secondary = lam;
      break;
    }
    case Conjugacy::GammaRate: out.primary = rng.gamma(post.g_shape, post.g_rate); break;
    case Conjugacy::NormalWishart: {
      int d = static_cast<int>(post.mu0.size());
      MatrixXd scale = post.rate0.llt().solve(MatrixXd::Identity(d, d));
      scale = 0.5 * (scale + scale.transpose());
      MatrixXd P = wishart_draw(post.dof0, scale, rng);
      Eigen::LLT<MatrixXd> llt((post.kappa0 * P).eval());
      if (llt.info() != Eigen::Success) throw NumericError("drawn precision not positive definite");
      VectorXd z(d);
      for (int i = 0; i < d; ++i) z[i] = rng.normal();
      out.primary = VectorXd(post.mu0 + llt.matrixU().solve(z));
      out.secondary = P;
      break;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// link-function moments

double moment_of_t(const FamilyDescriptor& fam, const std::vector<Value>& params, int i) {
  switch (fam.kind) {
    case Conjugacy::GammaRate: {
      // w(beta) = -beta against t(x) = x; log Z = -alpha log beta + log Gamma(alpha)
      double beta = as_scalar(params.at(0));
      if (!(beta > 0.0)) throw NumericError("rate must be positive");
      if (i != 0) throw ModelError("Gamma has a single statistic");
      double dw = -1.0;
      double dlogZ = -fam.fixed_shape / beta;
      return dlogZ / dw;
    }
    case Conjugacy::GaussianKnownSd: {
      // w = (mu/sd^2, .) against t = (x, x^2); moments from normalizer derivatives
      double mu = as_scalar(params.at(0));
      double v = fam.known_sd * fam.known_sd;
      if (i == 0) return mu;
      if (i == 1) return mu * mu + v;
      throw ModelError("statistic index out of range");
    }
    default:
      throw ModelError("link function unavailable for this family");
  }
}

// ---------------------------------------------------------------------------
// generic density dispatch

double log_density(const FamilyDescriptor& fam, const std::vector<Value>& params, const Obs& obs,
                   bool* in_support) {
  if (in_support) *in_support = true;
  double lp = kNegInf;
  switch (fam.kind) {
    case Conjugacy::DirichletMultinomial: {
      const Value& t = params.at(0);
      int x = as_index(obs.x);
      if (std::holds_alternative<double>(t))
        lp = bernoulli_logpdf(std::get<double>(t), x);
      else
        lp = multinomial_logpdf(as_vector(t), x);
      break;
    }
    case Conjugacy::GaussianKnownSd:
      lp = gaussian_logpdf(as_scalar(params.at(0)), fam.known_sd, as_scalar(obs.x));
      break;
    case Conjugacy::NormalGamma:
      lp = gaussian_linear_logpdf(as_vector(params.at(0)), as_scalar(params.at(1)), obs.basis,
                                  as_scalar(obs.x));
      break;
    case Conjugacy::GammaRate:
      lp = gamma_logpdf(fam.fixed_shape, as_scalar(params.at(0)), as_scalar(obs.x));
      break;
    case Conjugacy::NormalWishart:
      lp = mv_gaussian_logpdf(as_vector(params.at(0)), as_matrix(params.at(1)),
                              as_vector(obs.x));
      break;
  }
  if (lp == kNegInf && in_support) *in_support = false;
  return lp;
}

}  // namespace gm
