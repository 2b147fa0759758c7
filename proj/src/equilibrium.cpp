#include "edgeld/equilibrium.hpp"

#include "edgeld/error.hpp"
#include "edgeld/io.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>
#include <json.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numbers>

namespace edgeld {

DensityGrid DensityGrid::uniform(double half_width, std::size_t cells)
{
    if (!(half_width > 0.0) || cells < 2)
        throw PreconditionError("density grid needs L > 0 and at least two cells");
    DensityGrid g;
    g.spacing = 2.0 * half_width / static_cast<double>(cells);
    g.points.resize(cells + 1);
    for (std::size_t k = 0; k <= cells; ++k)
        g.points[k] = -half_width + static_cast<double>(k) * g.spacing;
    g.points.back() = half_width;
    g.values.assign(cells + 1, 0.0);
    return g;
}

double DensityGrid::integrate(const std::function<double(double)>& f) const
{
    double sum = 0.0;
    for (std::size_t i = 0; i < size(); ++i) {
        const double w = (i == 0 || i + 1 == size()) ? 0.5 : 1.0;
        if (values[i] != 0.0)
            sum += w * f(points[i]) * values[i];
    }
    return sum * spacing;
}

double DensityGrid::mass() const
{
    double sum = 0.0;
    for (std::size_t i = 0; i < size(); ++i)
        sum += (i == 0 || i + 1 == size()) ? 0.5 * values[i] : values[i];
    return sum * spacing;
}

namespace {

using ld = long double;

// F0' = g and F1' = u g(u); both vanish at u = 0.
ld antiderivative0(const InteractionKind& kind, ld u)
{
    if (u == 0.0L)
        return 0.0L;
    if (kind.is_log())
        return u - u * std::log(std::abs(u));
    const ld s = kind.s();
    return std::copysign(std::pow(std::abs(u), 1.0L - s), u) / (1.0L - s);
}

ld antiderivative1(const InteractionKind& kind, ld u)
{
    if (u == 0.0L)
        return 0.0L;
    if (kind.is_log())
        return u * u / 4.0L - u * u / 2.0L * std::log(std::abs(u));
    const ld s = kind.s();
    return std::pow(std::abs(u), 2.0L - s) / (2.0L - s);
}

} // namespace

namespace {

struct HatHalves
{
    ld rising;
    ld falling;
};

// With u = x - y, the rising half (u - d + h)/h on [d - h, d] is the part of the hat
// to the right of its node in y, and the falling half (d + h - u)/h on [d, d + h]
// the part to the left.
HatHalves hat_halves(const InteractionKind& kind, ld d, ld h)
{
    const ld f0_lo = antiderivative0(kind, d - h), f0_mid = antiderivative0(kind, d),
             f0_hi = antiderivative0(kind, d + h);
    const ld f1_lo = antiderivative1(kind, d - h), f1_mid = antiderivative1(kind, d),
             f1_hi = antiderivative1(kind, d + h);
    return {(f1_mid - f1_lo) / h - (d - h) / h * (f0_mid - f0_lo),
            (d + h) / h * (f0_hi - f0_mid) - (f1_hi - f1_mid) / h};
}

} // namespace

double hat_kernel_weight(const InteractionKind& kind, double d, double h)
{
    const auto w = hat_halves(kind, d, h);
    return static_cast<double>(w.rising + w.falling);
}

double interaction_potential(const DensityGrid& density, const InteractionKind& kind, double x)
{
    // The end nodes carry only the half hats that stay inside [-L, L].
    const std::size_t m = density.size();
    const ld h = density.spacing;
    ld sum = 0.0L;
    for (std::size_t j = 0; j < m; ++j) {
        if (density.values[j] == 0.0)
            continue;
        const auto w = hat_halves(kind, static_cast<ld>(x) - density.points[j], h);
        const ld weight = j == 0 ? w.rising : j + 1 == m ? w.falling : w.rising + w.falling;
        sum += density.values[j] * weight;
    }
    return static_cast<double>(sum);
}

std::vector<double> interaction_potential_on_grid(const DensityGrid& density, const InteractionKind& kind)
{
    const std::size_t m = density.size();
    const double h = density.spacing;
    std::vector<double> w(m), first(m), last(m);
    for (std::size_t k = 0; k < m; ++k) {
        const auto halves = hat_halves(kind, static_cast<ld>(k) * h, h);
        w[k] = static_cast<double>(halves.rising + halves.falling);
        first[k] = static_cast<double>(halves.rising);
        last[k] = static_cast<double>(hat_halves(kind, -static_cast<ld>(k) * h, h).falling);
    }
    std::vector<double> u(m, 0.0);
    const auto& rho = density.values;
    for (std::size_t i = 0; i < m; ++i) {
        double acc = 0.0;
        for (std::size_t j = 1; j < i; ++j)
            acc += rho[j] * w[i - j];
        for (std::size_t j = std::max<std::size_t>(i, 1); j + 1 < m; ++j)
            acc += rho[j] * w[j - i];
        acc += rho[0] * first[i];
        if (m > 1)
            acc += rho[m - 1] * last[m - 1 - i];
        u[i] = acc;
    }
    return u;
}

double default_half_width(const PotentialSpec& potential, const InteractionKind& kind, double pressure)
{
    const double k = potential.kappa(), a = potential.alpha();
    auto margin = [&](double l) {
        double v = k * std::pow(l, a) - a * std::log(l);
        if (kind.is_log())
            v -= 2.0 * pressure * std::log1p(l);
        return v;
    };
    double l = 1.0;
    while (margin(l) <= 40.0)
        l += 0.01;
    return l;
}

double EquilibriumMeasure::density_at(double x) const
{
    const auto& g = density;
    if (g.size() == 0 || x < g.points.front() || x > g.points.back())
        return 0.0;
    const double pos = (x - g.points.front()) / g.spacing;
    const auto i = std::min(static_cast<std::size_t>(pos), g.size() - 2);
    const double t = pos - static_cast<double>(i);
    return (1.0 - t) * g.values[i] + t * g.values[i + 1];
}

namespace {

struct Image
{
    std::vector<double> values;
    double lambda;
};

// exp(-V - 2P U) normalised to unit trapezoid mass, and the constant that does it.
Image fixed_point_image(const DensityGrid& grid, std::span<const double> v, std::span<const double> u,
                        double pressure)
{
    Image img;
    img.values.resize(grid.size());
    // Shift by the minimum exponent so nothing overflows before normalisation.
    double min_exponent = INFINITY;
    for (std::size_t i = 0; i < grid.size(); ++i)
        min_exponent = std::min(min_exponent, v[i] + 2.0 * pressure * u[i]);
    for (std::size_t i = 0; i < grid.size(); ++i)
        img.values[i] = std::exp(-(v[i] + 2.0 * pressure * u[i] - min_exponent));
    DensityGrid tmp{grid.points, img.values, grid.spacing};
    const double mass = tmp.mass();
    for (auto& x : img.values)
        x /= mass;
    img.lambda = min_exponent - std::log(mass);
    return img;
}

double log_residual(std::span<const double> rho, std::span<const double> v, std::span<const double> u,
                    double pressure, double lambda)
{
    double r = 0.0;
    for (std::size_t i = 0; i < rho.size(); ++i)
        if (rho[i] > 1e-12)
            r = std::max(r, std::abs(v[i] + 2.0 * pressure * u[i] + std::log(rho[i]) - lambda));
    return r;
}

} // namespace

EquilibriumMeasure solve_equilibrium(const PotentialSpec& potential, const InteractionKind& kind, double pressure,
                                     const GridConfig& config, std::optional<std::vector<double>> initial_values,
                                     const EquilibriumObserver& observer)
{
    if (!(pressure >= 0.0) || !std::isfinite(pressure))
        throw PreconditionError("solve_equilibrium: pressure must be finite and nonnegative");
    if (!(config.damping > 0.0 && config.damping <= 1.0))
        throw PreconditionError("solve_equilibrium: damping must lie in (0, 1]");
    if (!(config.tol > 0.0))
        throw PreconditionError("solve_equilibrium: tolerance must be positive");
    const double half_width =
        config.half_width > 0.0 ? config.half_width : default_half_width(potential, kind, pressure);
    // exp(-V(+-L)) < 1e-14
    constexpr double min_edge_potential = 32.24;
    if (potential.value(half_width) <= min_edge_potential || potential.value(-half_width) <= min_edge_potential)
        throw PreconditionError("solve_equilibrium: grid half-width " + format_double(half_width) +
                                " too small, exp(-V(+-L)) must be below 1e-14");

    const std::size_t cells = config.cells;
    DensityGrid grid = DensityGrid::uniform(half_width, cells);
    std::vector<double> v(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i)
        v[i] = potential.value(grid.points[i]);

    if (initial_values) {
        if (initial_values->size() != grid.size())
            throw PreconditionError("solve_equilibrium: initial guess has the wrong number of grid values");
        grid.values = std::move(*initial_values);
        for (double x : grid.values)
            if (!(x >= 0.0) || !std::isfinite(x))
                throw PreconditionError("solve_equilibrium: initial guess must be finite and nonnegative");
        const double mass = grid.mass();
        if (!(mass > 0.0))
            throw PreconditionError("solve_equilibrium: initial guess has zero mass");
        for (auto& x : grid.values)
            x /= mass;
    } else {
        const std::vector<double> zeros(grid.size(), 0.0);
        grid.values = fixed_point_image(grid, v, zeros, 0.0).values;
    }

    std::vector<double> u = pressure > 0.0 ? interaction_potential_on_grid(grid, kind)
                                           : std::vector<double>(grid.size(), 0.0);
    double theta = config.damping;
    double previous_update = INFINITY;
    double update = INFINITY, residual = INFINITY;
    std::size_t iter = 0;
    for (; iter < config.max_iter; ++iter) {
        if (observer)
            observer(iter, grid);
        const Image img = fixed_point_image(grid, v, u, pressure);
        residual = log_residual(grid.values, v, u, pressure, img.lambda);
        update = 0.0;
        for (std::size_t i = 0; i < grid.size(); ++i)
            update = std::max(update, std::abs(img.values[i] - grid.values[i]));
        update *= theta;
        if (update < config.tol && residual < config.tol)
            break;
        if (update > previous_update) {
            theta *= 0.5;
            update *= 0.5;
        }
        previous_update = update;
        for (std::size_t i = 0; i < grid.size(); ++i)
            grid.values[i] = (1.0 - theta) * grid.values[i] + theta * img.values[i];
        if (pressure > 0.0)
            u = interaction_potential_on_grid(grid, kind);
    }
    if (iter == config.max_iter)
        throw ConvergenceError("solve_equilibrium: no convergence after " + std::to_string(config.max_iter) +
                                   " iterations",
                               std::max(update, residual));

    EquilibriumMeasure eq;
    const Image img = fixed_point_image(grid, v, u, pressure);
    eq.lambda_eq = img.lambda;
    eq.residual = residual;
    eq.iterations = iter;
    eq.u_potential = std::move(u);
    eq.density = std::move(grid);
    eq.pressure = pressure;
    eq.interaction = kind;
    eq.kappa = potential.kappa();
    eq.alpha = potential.alpha();
    return eq;
}

double askey_wimp_kerov_density(double pressure, double x)
{
    if (!(pressure > 0.0) || !std::isfinite(pressure))
        throw PreconditionError("askey_wimp_kerov_density: P must be finite and positive");
    using boost::math::quadrature::gauss_kronrod;
    using boost::math::quadrature::tanh_sinh;
    thread_local tanh_sinh<double> near_zero;
    const double p = pressure;
    auto weight = [p](double t) { return std::exp((p - 1.0) * std::log(t) - 0.5 * t * t); };
    auto re = [&](double t) { return t > 0.0 ? weight(t) * std::cos(x * t) : (p == 1.0 ? 1.0 : 0.0); };
    auto im = [&](double t) { return t > 0.0 ? weight(t) * std::sin(x * t) : 0.0; };
    const double t_max = std::sqrt(std::max(p - 1.0, 0.0)) + 10.0;

    double err_a = 0, err_b = 0, err_c = 0, err_d = 0, l1a = 0, l1c = 0;
    const double re0 = near_zero.integrate(re, 0.0, 1.0, 1e-14, &err_a, &l1a);
    const double im0 = near_zero.integrate(im, 0.0, 1.0, 1e-14, &err_c, &l1c);
    const double re1 = gauss_kronrod<double, 61>::integrate(re, 1.0, t_max, 20, 1e-14, &err_b);
    const double im1 = gauss_kronrod<double, 61>::integrate(im, 1.0, t_max, 20, 1e-14, &err_d);
    const double total_err = err_a * l1a + err_b + err_c * l1c + err_d;
    const double scale = std::abs(re0) + std::abs(re1) + std::abs(im0) + std::abs(im1);
    if (!std::isfinite(re0 + re1 + im0 + im1) || total_err > 1e-9 * std::max(scale, 1e-300))
        throw ConvergenceError("askey_wimp_kerov_density: quadrature did not converge", total_err);
    const double prefactor = p / std::tgamma(p);
    const double modulus2 = prefactor * ((re0 + re1) * (re0 + re1) + (im0 + im1) * (im0 + im1));
    return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi) / modulus2;
}

double edge_log_residual(const GasParameters& params, const EquilibriumMeasure& eq, double e,
                         EdgeConvention convention)
{
    const double grad = params.potential.gradient(e);
    if (!(grad > 0.0) || !(e > 0.0))
        return INFINITY;
    double value = std::log(static_cast<double>(params.n)) - params.potential.value(e) - std::log(grad);
    if (params.interaction.is_log())
        value += params.beta * static_cast<double>(params.n) * std::log(e);
    value += convention == EdgeConvention::MultiplyByConstant ? eq.lambda_eq : -eq.lambda_eq;
    return value;
}

double solve_edge(const GasParameters& params, const EquilibriumMeasure& eq, EdgeConvention convention)
{
    params.validate();
    if (params.n < 2)
        throw PreconditionError("solve_edge: need n >= 2");
    auto f = [&](double e) { return edge_log_residual(params, eq, e, convention); };
    const double kappa = params.potential.kappa(), alpha = params.potential.alpha();
    double lo = 1.0;
    double hi = 4.0 * std::pow(std::log(static_cast<double>(params.n)) / kappa, 1.0 / alpha) + 4.0;
    for (int k = 0; k < 60 && !(f(lo) > 0.0); ++k)
        lo *= 0.5;
    for (int k = 0; k < 60 && !(f(hi) < 0.0); ++k)
        hi *= 2.0;
    if (!(f(lo) > 0.0) || !(f(hi) < 0.0))
        throw ConvergenceError("solve_edge: no sign change of the edge equation on [" + format_double(lo) + ", " +
                                   format_double(hi) + "]",
                               f(hi));
    double mid = 0.5 * (lo + hi);
    for (int it = 0; it < 200; ++it) {
        mid = 0.5 * (lo + hi);
        const double fm = f(mid);
        if (std::abs(fm) <= 1e-13 || mid <= lo || mid >= hi)
            break;
        (fm > 0.0 ? lo : hi) = mid;
    }
    const double r = f(mid);
    if (!(std::abs(r) <= 1e-10))
        throw ConvergenceError("solve_edge: bisection stalled", r);
    return mid;
}

double free_energy(const DensityGrid& density, const std::function<double(double)>& potential,
                   const InteractionKind& kind, double pressure)
{
    double energy = density.integrate(potential);
    if (pressure != 0.0) {
        const auto u = interaction_potential_on_grid(density, kind);
        double pair = 0.0;
        for (std::size_t i = 0; i < density.size(); ++i) {
            const double w = (i == 0 || i + 1 == density.size()) ? 0.5 : 1.0;
            pair += w * density.values[i] * u[i];
        }
        energy += pressure * pair * density.spacing;
    }
    double entropy = 0.0;
    for (std::size_t i = 0; i < density.size(); ++i) {
        const double r = density.values[i];
        if (r > 0.0) {
            const double w = (i == 0 || i + 1 == density.size()) ? 0.5 : 1.0;
            entropy += w * r * std::log(r);
        }
    }
    return energy + entropy * density.spacing;
}

double free_energy(const DensityGrid& density, const PotentialSpec& potential, const InteractionKind& kind,
                   double pressure)
{
    return free_energy(density, [&](double x) { return potential.value(x); }, kind, pressure);
}

std::pair<std::string, std::string> equilibrium_file_texts(const EquilibriumMeasure& eq)
{
    CsvWriter csv({"x", "rho", "u_potential"});
    for (std::size_t i = 0; i < eq.density.size(); ++i) {
        csv.cell(eq.density.points[i]).cell(eq.density.values[i]).cell(eq.u_potential[i]);
        csv.end_row();
    }
    nlohmann::ordered_json header;
    header["lambda_eq"] = eq.lambda_eq;
    header["P"] = eq.pressure;
    header["interaction"] = {{"kind", eq.interaction.name()}, {"s", eq.interaction.s()}};
    header["potential_params"] = {{"kappa", eq.kappa}, {"alpha", eq.alpha}};
    header["residual"] = eq.residual;
    header["iterations"] = eq.iterations;
    header["half_width"] = eq.density.half_width();
    header["cells"] = eq.density.size() - 1;

    return {csv.text(), header.dump(2) + "\n"};
}

void save_equilibrium(const EquilibriumMeasure& eq, const std::filesystem::path& base)
{
    auto csv_path = base, json_path = base;
    csv_path += ".csv";
    json_path += ".json";
    const auto [csv, header] = equilibrium_file_texts(eq);
    AtomicFileSet files;
    files.stage(csv_path, csv);
    files.stage(json_path, header);
    files.commit();
}

EquilibriumMeasure load_equilibrium(const std::filesystem::path& base)
{
    auto csv_path = base, json_path = base;
    csv_path += ".csv";
    json_path += ".json";
    EquilibriumMeasure eq;
    try {
        const auto header = nlohmann::json::parse(read_text_file(json_path));
        eq.lambda_eq = header.at("lambda_eq").get<double>();
        eq.pressure = header.at("P").get<double>();
        const auto& inter = header.at("interaction");
        eq.interaction = inter.at("kind").get<std::string>() == "log"
                             ? InteractionKind::log()
                             : InteractionKind::riesz(inter.at("s").get<double>());
        eq.kappa = header.at("potential_params").at("kappa").get<double>();
        eq.alpha = header.at("potential_params").at("alpha").get<double>();
        eq.residual = header.at("residual").get<double>();
        eq.iterations = header.value("iterations", std::size_t{0});
    } catch (const nlohmann::json::exception& e) {
        throw IoError("equilibrium header " + json_path.string() + ": " + e.what());
    }
    const auto rows = parse_csv(read_text_file(csv_path));
    if (rows.size() < 3 || rows[0] != std::vector<std::string>{"x", "rho", "u_potential"})
        throw IoError("equilibrium CSV: missing or unexpected header in " + csv_path.string());
    auto number = [](const std::string& s) {
        double v = 0;
        auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
        if (ec != std::errc{} || ptr != s.data() + s.size())
            throw IoError("equilibrium CSV: bad number '" + s + "'");
        return v;
    };
    for (std::size_t r = 1; r < rows.size(); ++r) {
        if (rows[r].size() != 3)
            throw IoError("equilibrium CSV: malformed row " + std::to_string(r));
        eq.density.points.push_back(number(rows[r][0]));
        eq.density.values.push_back(number(rows[r][1]));
        eq.u_potential.push_back(number(rows[r][2]));
    }
    eq.density.spacing = (eq.density.points.back() - eq.density.points.front()) /
                         static_cast<double>(eq.density.points.size() - 1);
    return eq;
}

} // namespace edgeld
