#include "wspd/mode_solver.hpp"

#include <algorithm>
#include <cmath>

#include "wspd/constants.hpp"
#include "wspd/eigensolver.hpp"
#include "wspd/error.hpp"

namespace wspd {

namespace {

using Triplets = std::vector<Eigen::Triplet<Complex>>;

SparseMatrix identity(Eigen::Index n) {
  SparseMatrix i(n, n);
  i.setIdentity();
  return i;
}

// Cell-centre values from node values (interior nodes only; the two wall
// nodes carry zero tangential field). Result: N x (N - 1).
SparseMatrix node_to_center_diff(const std::vector<double>& edges, double k0) {
  const auto n = static_cast<Eigen::Index>(edges.size() - 1);
  Triplets t;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double inv = 1.0 / (k0 * (edges[i + 1] - edges[i]));
    if (i >= 1) t.emplace_back(i, i - 1, -inv);
    if (i + 1 <= n - 1) t.emplace_back(i, i, inv);
  }
  SparseMatrix d(n, n - 1);
  d.setFromTriplets(t.begin(), t.end());
  return d;
}

// Interior-node values from cell-centre values. Result: (N - 1) x N.
SparseMatrix center_to_node_diff(const std::vector<double>& edges, double k0) {
  const auto n = static_cast<Eigen::Index>(edges.size() - 1);
  Triplets t;
  for (Eigen::Index k = 1; k < n; ++k) {
    const double c_lo = 0.5 * (edges[k - 1] + edges[k]);
    const double c_hi = 0.5 * (edges[k] + edges[k + 1]);
    const double inv = 1.0 / (k0 * (c_hi - c_lo));
    t.emplace_back(k - 1, k, inv);
    t.emplace_back(k - 1, k - 1, -inv);
  }
  SparseMatrix d(n - 1, n);
  d.setFromTriplets(t.begin(), t.end());
  return d;
}

// Kronecker product; with x-fastest ordering kron(Ay, Bx) acts on y by Ay
// and on x by Bx.
SparseMatrix kron(const SparseMatrix& a, const SparseMatrix& b) {
  Triplets t;
  t.reserve(static_cast<std::size_t>(a.nonZeros() * b.nonZeros()));
  for (int ka = 0; ka < a.outerSize(); ++ka)
    for (SparseMatrix::InnerIterator ia(a, ka); ia; ++ia)
      for (int kb = 0; kb < b.outerSize(); ++kb)
        for (SparseMatrix::InnerIterator ib(b, kb); ib; ++ib)
          t.emplace_back(ia.row() * b.rows() + ib.row(), ia.col() * b.cols() + ib.col(),
                         ia.value() * ib.value());
  SparseMatrix k(a.rows() * b.rows(), a.cols() * b.cols());
  k.setFromTriplets(t.begin(), t.end());
  return k;
}

SparseMatrix diagonal(const Eigen::VectorXcd& d) {
  SparseMatrix m(d.size(), d.size());
  Triplets t;
  for (Eigen::Index i = 0; i < d.size(); ++i) t.emplace_back(i, i, d(i));
  m.setFromTriplets(t.begin(), t.end());
  return m;
}

SparseMatrix blocks(const SparseMatrix& a11, const SparseMatrix& a12, const SparseMatrix& a21,
                    const SparseMatrix& a22) {
  Triplets t;
  auto put = [&t](const SparseMatrix& m, Eigen::Index r0, Eigen::Index c0) {
    for (int k = 0; k < m.outerSize(); ++k)
      for (SparseMatrix::InnerIterator it(m, k); it; ++it)
        t.emplace_back(r0 + it.row(), c0 + it.col(), it.value());
  };
  put(a11, 0, 0);
  put(a12, 0, a11.cols());
  put(a21, a11.rows(), 0);
  put(a22, a11.rows(), a11.cols());
  SparseMatrix out(a11.rows() + a21.rows(), a11.cols() + a12.cols());
  out.setFromTriplets(t.begin(), t.end());
  out.makeCompressed();
  return out;
}

std::vector<double> centers(const std::vector<double>& e) {
  std::vector<double> c(e.size() - 1);
  for (std::size_t i = 0; i + 1 < e.size(); ++i) c[i] = 0.5 * (e[i] + e[i + 1]);
  return c;
}

std::vector<double> interior(const std::vector<double>& e) { return {e.begin() + 1, e.end() - 1}; }

// Dual spacing at interior node k (half of each neighbouring cell).
double dual(const std::vector<double>& e, std::size_t k) { return 0.5 * (e[k + 1] - e[k - 1]); }

FieldComponent component(std::vector<double> x, std::vector<double> y, const Eigen::VectorXcd& v,
                         Complex scale) {
  FieldComponent f{std::move(x), std::move(y), {}};
  f.values.resize(static_cast<std::size_t>(v.size()));
  for (Eigen::Index i = 0; i < v.size(); ++i) f.values[static_cast<std::size_t>(i)] = v(i) * scale;
  return f;
}

}  // namespace

double FieldComponent::max_abs() const {
  double m = 0.0;
  for (const auto& v : values) m = std::max(m, std::abs(v));
  return m;
}

Complex ModeSolution::beta() const { return constants::wavenumber(wavelength_m) * n_eff; }

double ModeSolution::alpha_per_m() const {
  return 2.0 * constants::wavenumber(wavelength_m) * n_eff.imag();
}

Polarization ModeSolution::polarization() const {
  return te_fraction >= 0.5 ? Polarization::te_like : Polarization::tm_like;
}

PolarizationClass classify_polarization(const ModeSolution& mode) {
  return {mode.polarization(), mode.te_fraction};
}

double modal_absorption_per_cm(Complex n_eff, double wavelength_m) {
  return 4.0 * constants::pi * n_eff.imag() / wavelength_m * 1e-2;
}

double modal_absorption_per_cm(const ModeSolution& mode) {
  return modal_absorption_per_cm(mode.n_eff, mode.wavelength_m);
}

ModeOperator assemble_operator(const PermittivityGrid& grid, double wavelength_m) {
  if (grid.nx() < 3 || grid.ny() < 3) throw ConfigError("grid too small: need >= 3 cells per axis");
  if (!(wavelength_m > 0.0)) throw ConfigError("wavelength must be positive");

  ModeOperator op(grid);
  const double k0 = constants::wavenumber(wavelength_m);
  op.k0_ = k0;
  const auto& xe = grid.x_edges();
  const auto& ye = grid.y_edges();
  const auto nx = static_cast<Eigen::Index>(grid.nx());
  const auto ny = static_cast<Eigen::Index>(grid.ny());

  // The grid stores (n - ik)^2; the operator uses the exp(-i w t) convention
  // where absorption shows up as a positive imaginary part of n_eff.
  auto eps = [&](Eigen::Index ix, Eigen::Index iy) {
    return std::conj(grid.eps(static_cast<std::size_t>(ix), static_cast<std::size_t>(iy)));
  };

  // eps_x at Ex sites (cell x-centre, interior y-node): average across y.
  op.eps_x_.resize(nx * (ny - 1));
  for (Eigen::Index j = 1; j < ny; ++j)
    for (Eigen::Index i = 0; i < nx; ++i) {
      const double lo = grid.dy(j - 1), hi = grid.dy(j);
      op.eps_x_(i + nx * (j - 1)) = (eps(i, j - 1) * lo + eps(i, j) * hi) / (lo + hi);
    }
  // eps_y at Ey sites (interior x-node, cell y-centre): average across x.
  op.eps_y_.resize((nx - 1) * ny);
  for (Eigen::Index j = 0; j < ny; ++j)
    for (Eigen::Index i = 1; i < nx; ++i) {
      const double lo = grid.dx(i - 1), hi = grid.dx(i);
      op.eps_y_((i - 1) + (nx - 1) * j) = (eps(i - 1, j) * lo + eps(i, j) * hi) / (lo + hi);
    }
  // eps_z at interior nodes: area-weighted average of the four cells.
  op.eps_z_.resize((nx - 1) * (ny - 1));
  for (Eigen::Index j = 1; j < ny; ++j)
    for (Eigen::Index i = 1; i < nx; ++i) {
      Complex acc = 0.0;
      double area = 0.0;
      for (Eigen::Index dj = -1; dj <= 0; ++dj)
        for (Eigen::Index di = -1; di <= 0; ++di) {
          const double a = grid.dx(i + di) * grid.dy(j + dj);
          acc += eps(i + di, j + dj) * a;
          area += a;
        }
      op.eps_z_((i - 1) + (nx - 1) * (j - 1)) = acc / area;
    }
  op.lossless_ = grid.max_abs_imag_eps() == 0.0;

  const SparseMatrix dfx = node_to_center_diff(xe, k0), dfy = node_to_center_diff(ye, k0);
  const SparseMatrix dbx = center_to_node_diff(xe, k0), dby = center_to_node_diff(ye, k0);
  const SparseMatrix ix = identity(nx), ix1 = identity(nx - 1);
  const SparseMatrix iy = identity(ny), iy1 = identity(ny - 1);

  const SparseMatrix dx_e = kron(iy, dfx);    // Ey -> Hz
  const SparseMatrix dy_e = kron(dfy, ix);    // Ex -> Hz
  const SparseMatrix dx_h = kron(iy1, dbx);   // Hy -> Ez
  const SparseMatrix dy_h = kron(dby, ix1);   // Hx -> Ez
  const SparseMatrix dx_ez = kron(iy1, dfx);  // Ez -> Ex sites
  const SparseMatrix dy_ez = kron(dfy, ix1);  // Ez -> Ey sites
  const SparseMatrix dx_hz = kron(iy, dbx);   // Hz -> Hx sites
  const SparseMatrix dy_hz = kron(dby, ix);   // Hz -> Hy sites

  const SparseMatrix inv_ez = diagonal(op.eps_z_.cwiseInverse());
  const SparseMatrix ex_diag = diagonal(op.eps_x_);
  const SparseMatrix ey_diag = diagonal(op.eps_y_);
  const SparseMatrix i_ex = identity(nx * (ny - 1));
  const SparseMatrix i_ey = identity((nx - 1) * ny);

  // n E_t = P H_t
  const SparseMatrix p11 = -(dx_ez * inv_ez * dy_h);
  const SparseMatrix p12 = i_ex + dx_ez * inv_ez * dx_h;
  const SparseMatrix p21 = -(i_ey + dy_ez * inv_ez * dy_h);
  const SparseMatrix p22 = dy_ez * inv_ez * dx_h;
  // n H_t = Q E_t
  const SparseMatrix q11 = dx_hz * dy_e;
  const SparseMatrix q12 = -(ey_diag + dx_hz * dx_e);
  const SparseMatrix q21 = ex_diag + dy_hz * dy_e;
  const SparseMatrix q22 = -(dy_hz * dx_e);

  op.h_to_e_ = blocks(p11, p12, p21, p22);
  op.e_to_h_ = blocks(q11, q12, q21, q22);
  op.system_ = op.h_to_e_ * op.e_to_h_;
  op.system_.makeCompressed();
  op.n_ex_ = static_cast<std::size_t>(nx * (ny - 1));

  op.div_x_ = dx_h * ex_diag;
  op.div_y_ = dy_h * ey_diag;
  {
    const SparseMatrix neg_dy = -dy_e;
    Triplets t;
    for (int k = 0; k < neg_dy.outerSize(); ++k)
      for (SparseMatrix::InnerIterator it(neg_dy, k); it; ++it) t.emplace_back(it.row(), it.col(), it.value());
    for (int k = 0; k < dx_e.outerSize(); ++k)
      for (SparseMatrix::InnerIterator it(dx_e, k); it; ++it)
        t.emplace_back(it.row(), neg_dy.cols() + it.col(), it.value());
    op.curl_z_.resize(nx * ny, neg_dy.cols() + dx_e.cols());
    op.curl_z_.setFromTriplets(t.begin(), t.end());
  }
  return op;
}

ModeSolution ModeOperator::make_mode(const Eigen::VectorXcd& e_t, Complex n_eff_squared) const {
  const auto& xe = grid_.x_edges();
  const auto& ye = grid_.y_edges();
  const std::size_t nx = grid_.nx(), ny = grid_.ny();
  const auto n_ex = static_cast<Eigen::Index>(n_ex_);
  const auto n_ey = e_t.size() - n_ex;

  Complex n_eff = std::sqrt(n_eff_squared);
  if (n_eff.real() < 0.0) n_eff = -n_eff;

  const Eigen::VectorXcd h_t = (e_to_h_ * e_t) / n_eff;
  const Eigen::VectorXcd ex = e_t.head(n_ex), ey = e_t.tail(n_ey);
  const Eigen::VectorXcd hx = h_t.head(n_ey), hy = h_t.tail(n_ex);
  // Longitudinal components: Ez from div(eps E) = 0, Hz from curl E.
  const Eigen::VectorXcd div_t = div_x_ * ex + div_y_ * ey;
  const Eigen::VectorXcd ez = Complex(0.0, 1.0) * div_t.cwiseQuotient(eps_z_) / n_eff;
  const Eigen::VectorXcd hz = Complex(0.0, -1.0) * (curl_z_ * e_t);

  // Area weights of the Ex/Hy and Ey/Hx sites.
  Eigen::VectorXd w_ex(n_ex), w_ey(n_ey);
  for (std::size_t j = 1; j < ny; ++j)
    for (std::size_t i = 0; i < nx; ++i) w_ex(static_cast<Eigen::Index>(i + nx * (j - 1))) = grid_.dx(i) * dual(ye, j);
  for (std::size_t j = 0; j < ny; ++j)
    for (std::size_t i = 1; i < nx; ++i)
      w_ey(static_cast<Eigen::Index>((i - 1) + (nx - 1) * j)) = dual(xe, i) * grid_.dy(j);

  // Time-averaged Poynting flux; H_t carries the vacuum impedance.
  Complex flux = 0.0;
  for (Eigen::Index i = 0; i < n_ex; ++i) flux += ex(i) * std::conj(hy(i)) * w_ex(i);
  for (Eigen::Index i = 0; i < n_ey; ++i) flux -= ey(i) * std::conj(hx(i)) * w_ey(i);
  const double power = 0.5 * flux.real() / constants::vacuum_impedance;

  double u_x = 0.0, u_y = 0.0;
  for (Eigen::Index i = 0; i < n_ex; ++i) u_x += std::norm(ex(i)) * w_ex(i);
  for (Eigen::Index i = 0; i < n_ey; ++i) u_y += std::norm(ey(i)) * w_ey(i);

  // Unit power, and the dominant transverse sample made real positive.
  Complex peak = 0.0;
  for (Eigen::Index i = 0; i < e_t.size(); ++i)
    if (std::abs(e_t(i)) > std::abs(peak)) peak = e_t(i);
  Complex scale = std::abs(peak) > 0.0 ? std::conj(peak) / std::abs(peak) : Complex(1.0);
  const bool normalized = power > 0.0;
  if (normalized) scale /= std::sqrt(power);
  const Complex h_scale = scale / constants::vacuum_impedance;

  ModeSolution m;
  m.n_eff = n_eff;
  m.wavelength_m = grid_.wavelength();
  m.ex = component(centers(xe), interior(ye), ex, scale);
  m.ey = component(interior(xe), centers(ye), ey, scale);
  m.ez = component(interior(xe), interior(ye), ez, scale);
  m.hx = component(interior(xe), centers(ye), hx, h_scale);
  m.hy = component(centers(xe), interior(ye), hy, h_scale);
  m.hz = component(centers(xe), centers(ye), hz, h_scale);
  m.te_fraction = (u_x + u_y) > 0.0 ? u_x / (u_x + u_y) : 0.0;
  m.normalized = normalized;
  m.power_w = normalized ? power * std::norm(scale) : power;
  return m;
}

std::vector<ModeSolution> solve_modes(const ModeOperator& op, const SolverConfig& config) {
  if (!config.target_index) throw ConfigError("solver: effective-index target is required");
  if (!(config.tolerance > 0.0)) throw ConfigError("solver: tolerance must be > 0");
  if (config.modes < 1) throw ConfigError("solver: at least one mode must be requested");
  const double target = *config.target_index;
  const int m = config.krylov_dim > 0 ? config.krylov_dim : std::max(2 * config.modes + 10, 24);

  const auto pairs = shift_invert_eigs(op.system(), Complex(target * target, 0.0), config.modes, m,
                                       config.tolerance, config.max_restarts);
  std::vector<ModeSolution> modes;
  for (std::size_t i = 0; i < pairs.values.size(); ++i) {
    auto mode = op.make_mode(pairs.vectors.col(static_cast<Eigen::Index>(i)), pairs.values[i]);
    mode.residual = pairs.residuals[i];
    if (config.bracket && !config.bracket->contains(mode.n_eff.real())) continue;
    modes.push_back(std::move(mode));
  }
  std::stable_sort(modes.begin(), modes.end(), [](const ModeSolution& a, const ModeSolution& b) {
    return a.n_eff.real() > b.n_eff.real();
  });
  return modes;
}

SolverConfig default_solver_config(const CrossSection& cs, SolverConfig base) {
  if (!base.target_index) {
    const auto core = cs.materials().at(cs.stack().core().material).index_at(cs.wavelength());
    base.target_index = 0.98 * core.real();
  }
  if (!base.bracket) base.bracket = GuidedBracket{cs.cladding_index(), cs.max_index()};
  return base;
}

std::optional<ModeSolution> select_mode(const std::vector<ModeSolution>& modes, ModeSelector which) {
  const auto want = which == ModeSelector::fundamental_te ? Polarization::te_like : Polarization::tm_like;
  for (const auto& m : modes)
    if (m.polarization() == want) return m;
  return std::nullopt;
}

std::vector<ModeSolution> solve_cross_section(const CrossSection& cs, const ResolutionPolicy& policy,
                                              const SolverConfig& config) {
  const auto grid = rasterize(cs, policy);
  const auto op = assemble_operator(grid, cs.wavelength());
  return solve_modes(op, default_solver_config(cs, config));
}

ConvergenceTable convergence_study(const CrossSection& cs, const std::vector<double>& cell_scales,
                                   const ResolutionPolicy& base, ModeSelector which,
                                   const SolverConfig& config) {
  if (cell_scales.size() < 3) throw ConfigError("convergence study needs at least 3 refinement levels");
  ConvergenceTable table;
  table.complete = true;
  for (double s : cell_scales) {
    ConvergenceRow row;
    row.cell_scale = s;
    try {
      const auto policy = base.scaled(s);
      const auto grid = rasterize(cs, policy);
      row.cells = grid.cell_count();
      const auto op = assemble_operator(grid, cs.wavelength());
      const auto modes = solve_modes(op, default_solver_config(cs, config));
      const auto mode = select_mode(modes, which);
      if (!mode) throw ConvergenceError("no guided mode of the requested polarization", 0.0);
      row.n_eff = mode->n_eff;
      row.alpha_per_cm = modal_absorption_per_cm(*mode);
      row.ok = true;
    } catch (const Error& e) {
      row.error = e.what();
      table.complete = false;
    }
    if (!table.rows.empty() && table.rows.back().ok && row.ok) {
      const auto& prev = table.rows.back();
      row.delta_n_eff = std::abs(row.n_eff - prev.n_eff);
      row.delta_alpha_rel = row.alpha_per_cm != 0.0
                                ? std::abs(row.alpha_per_cm - prev.alpha_per_cm) / std::abs(row.alpha_per_cm)
                                : 0.0;
    }
    table.rows.push_back(std::move(row));
  }

  const auto n = table.rows.size();
  const auto& a = table.rows[n - 3];
  const auto& b = table.rows[n - 2];
  const auto& c = table.rows[n - 1];
  if (a.ok && b.ok && c.ok) {
    // The estimate assumes a geometric sequence of cell scales.
    const double r = b.cell_scale / c.cell_scale;
    const bool geometric = std::abs(a.cell_scale / b.cell_scale - r) < 1e-6 * r;
    // Use alpha when the structure absorbs, otherwise Re(n_eff).
    const bool lossy = std::abs(c.alpha_per_cm) > 1e-6;
    const double e1 = lossy ? std::abs(b.alpha_per_cm - a.alpha_per_cm) : std::abs(b.n_eff.real() - a.n_eff.real());
    const double e2 = lossy ? std::abs(c.alpha_per_cm - b.alpha_per_cm) : std::abs(c.n_eff.real() - b.n_eff.real());
    if (geometric && e1 > 0.0 && e2 > 0.0 && r > 1.0) table.order = std::log(e1 / e2) / std::log(r);
  }
  return table;
}

}  // namespace wspd
