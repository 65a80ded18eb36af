#ifndef GM_EXPFAM_HPP
#define GM_EXPFAM_HPP

#include <optional>

#include "gm/graph.hpp"
#include "gm/rng.hpp"
#include "gm/types.hpp"

namespace gm {

// ---------------------------------------------------------------------------
// special functions

double digamma(double x);
double log_beta(const VectorXd& a);
// log of the d-dimensional multivariate gamma function at a
double lgamma_d(int d, double a);

// ---------------------------------------------------------------------------
// densities (natural log, exact normalization)

double bernoulli_logpdf(double p, int x);
double multinomial_logpdf(const VectorXd& theta, int x);
double beta_logpdf(double a, double b, double theta);
double dirichlet_logpdf(const VectorXd& alpha, const VectorXd& theta);
double gaussian_logpdf(double mean, double sd, double x);
// y given basis b with coefficient vector theta and noise precision lam
double gaussian_linear_logpdf(const VectorXd& theta, double lam, const VectorXd& b, double y);
double gamma_logpdf(double shape, double rate, double x);
double mv_gaussian_logpdf(const VectorXd& mean, const MatrixXd& precision, const VectorXd& x);
// dof/scale parameterization: E[X] = dof * scale
double wishart_logpdf(double dof, const MatrixXd& scale, const MatrixXd& x);

// ---------------------------------------------------------------------------
// sufficient statistics and conjugate updating

// Which conjugate pairing a statistic/posterior belongs to.
enum class Conjugacy {
  DirichletMultinomial,  // includes Beta/Bernoulli as the 2-category case
  GaussianKnownSd,       // Gaussian prior on the mean, fixed noise sd
  NormalGamma,           // linear-Gaussian coefficients + noise precision
  GammaRate,             // Gamma likelihood with fixed shape, prior on rate
  NormalWishart,         // multivariate Gaussian mean + precision matrix
};

struct FamilyDescriptor {
  Conjugacy kind = Conjugacy::DirichletMultinomial;
  int dim = 1;              // categories C, or coefficient/vector dimension d
  double known_sd = 1.0;    // GaussianKnownSd
  double fixed_shape = 1.0; // GammaRate likelihood shape
  int stat_dim() const;
};

// One case for accumulate(): the response value plus covariates where the
// family has them.
struct Obs {
  Value x;
  VectorXd basis;  // NormalGamma only
};

struct SufficientStats {
  Conjugacy kind = Conjugacy::DirichletMultinomial;
  double n = 0.0;  // weighted case count

  VectorXd counts;              // DirichletMultinomial
  double sx = 0.0, sxx = 0.0;   // GaussianKnownSd
  MatrixXd S;                   // NormalGamma: sum b b^T
  VectorXd q;                   // NormalGamma: sum b y
  double ysq = 0.0;             // NormalGamma: sum y^2
  double sum_x = 0.0;           // GammaRate
  double sum_logx = 0.0;        // GammaRate
  VectorXd vsum;                // NormalWishart: sum x
  MatrixXd vsum2;               // NormalWishart: sum x x^T
};

SufficientStats zero_stats(const FamilyDescriptor& fam);
// stats += weight * t(obs); raw sums, so merging is exact
void accumulate(const FamilyDescriptor& fam, SufficientStats& stats, const Obs& obs,
                double weight);
void merge(SufficientStats& into, const SufficientStats& other);

struct ConjugateParams {
  Conjugacy kind = Conjugacy::DirichletMultinomial;

  VectorXd alpha;  // Dirichlet pseudo-counts (category order matches data values)

  double m0 = 0.0, tau0 = 1.0;  // GaussianKnownSd: prior mean and precision
  double known_sd = 1.0;

  VectorXd theta0;     // NormalGamma: coefficients | lam ~ N(theta0, (lam prec_scale)^-1)
  MatrixXd prec_scale;
  double a0 = 1.0, b0 = 1.0;  // lam ~ Gamma(a0, b0), shape/rate

  double g_shape = 1.0, g_rate = 1.0;  // GammaRate prior on the rate
  double like_shape = 1.0;             // fixed likelihood shape

  VectorXd mu0;          // NormalWishart: mean | P ~ N(mu0, (kappa0 P)^-1)
  double kappa0 = 1.0;
  double dof0 = 1.0;     // P ~ Wishart(dof0, rate0^-1)
  MatrixXd rate0;

  void validate() const;
};

ConjugateParams posterior(const ConjugateParams& prior, const SufficientStats& stats);

// Exact log marginal likelihood of the accumulated data, including the
// data-dependent carrier terms, so exp() of it matches direct integration.
double log_evidence(const ConjugateParams& prior, const SufficientStats& stats);

struct SummaryRequest {
  enum class Kind { Mean, Mode, MomentOfT, LogMoment } kind = Kind::Mean;
  int part = 0;   // 0: location parameter, 1: precision/scale parameter
  int index = 0;  // which statistic for MomentOfT / LogMoment
};

Value posterior_summary(const ConjugateParams& post, const SummaryRequest& req);

struct ParamDraw {
  Value primary;    // theta / mean / simplex / rate
  Value secondary;  // precision (scalar or matrix) where the pair is coupled
};

ParamDraw sample_param(const ConjugateParams& post, Rng& rng);

// E[t_i(x)] under the likelihood at fixed parameters, computed through the
// inverse natural-parameter map and the normalizer derivative. Only families
// with a full-rank natural parameterization support this.
double moment_of_t(const FamilyDescriptor& fam, const std::vector<Value>& params, int i);

// Generic Table-form density with support checking; params layout:
//   DirichletMultinomial: {theta simplex} (2-dim for Bernoulli, x int)
//   GaussianKnownSd:      {mean}
//   NormalGamma:          {theta vec, lam}
//   GammaRate:            {rate}
//   NormalWishart:        {mean vec, precision matrix}
double log_density(const FamilyDescriptor& fam, const std::vector<Value>& params,
                   const Obs& obs, bool* in_support = nullptr);

}  // namespace gm

#endif
