#include "ebvi/dataset.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include <Eigen/Cholesky>

namespace ebvi {

namespace {

std::string trim(std::string_view s) {
    auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_row(const std::string& line) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        auto comma = line.find(',', start);
        out.push_back(trim(std::string_view(line).substr(start, comma - start)));
        if (comma == std::string::npos) break;
        start = comma + 1;
    }
    return out;
}

std::string unquote(std::string s) {
    if (s.size() >= 2 && s.front() == '"' && s.back() == '"') return s.substr(1, s.size() - 2);
    return s;
}

double parse_number(const std::string& field, std::size_t line_no, std::size_t col) {
    double v = 0.0;
    const char* first = field.data();
    const char* last = field.data() + field.size();
    if (!field.empty() && *first == '+') ++first;
    auto [ptr, ec] = std::from_chars(first, last, v);
    if (field.empty() || ec != std::errc{} || ptr != last)
        throw InputError("line " + std::to_string(line_no) + ", column " + std::to_string(col + 1) +
                         ": cannot parse '" + field + "' as a number");
    if (!std::isfinite(v))
        throw InputError("line " + std::to_string(line_no) + ": non-finite value '" + field + "'");
    return v;
}

}  // namespace

void Dataset::validate() const {
    if (x.rows() < 1 || x.cols() < 1) throw InputError("dataset needs n >= 1 and p >= 1");
    if (y.size() != x.rows())
        throw InputError("response length " + std::to_string(y.size()) + " does not match " +
                         std::to_string(x.rows()) + " rows");
    if (static_cast<Eigen::Index>(names.size()) != x.cols())
        throw InputError("expected one name per column");
    for (Eigen::Index i = 0; i < y.size(); ++i)
        if (y[i] != 0.0 && y[i] != 1.0) throw InputError("response must be 0/1");
    if (!x.allFinite()) throw InputError("design matrix has non-finite entries");
}

Dataset make_dataset(Matrix x, Vector y, std::vector<std::string> names) {
    Dataset d;
    if (names.empty()) {
        names.reserve(static_cast<std::size_t>(x.cols()));
        for (Eigen::Index j = 0; j < x.cols(); ++j) names.push_back("x" + std::to_string(j + 1));
    }
    d.x = std::move(x);
    d.y = std::move(y);
    d.names = std::move(names);
    d.validate();
    return d;
}

Dataset load_csv(const std::filesystem::path& path, const std::string& response_column,
                 const LoadOptions& opts) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open " + path.string());

    std::string line;
    std::size_t line_no = 0;
    std::vector<std::string> header;
    while (std::getline(in, line)) {
        ++line_no;
        if (!trim(line).empty()) {
            header = split_row(line);
            break;
        }
    }
    if (header.empty()) throw InputError(path.string() + ": empty file, no header row");
    for (auto& h : header) h = unquote(h);

    std::ptrdiff_t response = -1;
    for (std::size_t c = 0; c < header.size(); ++c)
        if (header[c] == response_column) response = static_cast<std::ptrdiff_t>(c);
    if (response < 0) throw InputError("response column '" + response_column + "' not in header");
    if (header.size() < 2) throw InputError("no covariate columns besides the response");

    std::vector<std::vector<double>> rows;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        auto fields = split_row(line);
        if (fields.size() != header.size())
            throw InputError("line " + std::to_string(line_no) + ": expected " +
                             std::to_string(header.size()) + " fields, got " +
                             std::to_string(fields.size()));
        std::vector<double> row(fields.size());
        for (std::size_t c = 0; c < fields.size(); ++c) row[c] = parse_number(fields[c], line_no, c);
        double yv = row[static_cast<std::size_t>(response)];
        if (yv != 0.0 && yv != 1.0)
            throw InputError("line " + std::to_string(line_no) + ": response value '" +
                             fields[static_cast<std::size_t>(response)] + "' is not 0/1");
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw InputError(path.string() + ": no data rows");

    const auto n = static_cast<Eigen::Index>(rows.size());
    const auto p = static_cast<Eigen::Index>(header.size() - 1);
    Matrix x(n, p);
    Vector y(n);
    std::vector<std::string> names;
    for (std::size_t c = 0; c < header.size(); ++c)
        if (static_cast<std::ptrdiff_t>(c) != response) names.push_back(header[c]);
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto& row = rows[static_cast<std::size_t>(i)];
        Eigen::Index col = 0;
        for (std::size_t c = 0; c < row.size(); ++c) {
            if (static_cast<std::ptrdiff_t>(c) == response)
                y[i] = row[c];
            else
                x(i, col++) = row[c];
        }
    }
    if (opts.standardize) standardize_columns(x);
    Dataset d = make_dataset(std::move(x), std::move(y), std::move(names));
    d.intercept = opts.intercept;
    return d;
}

void write_csv(const Dataset& d, const std::filesystem::path& path,
               const std::string& response_column) {
    std::ofstream out(path);
    if (!out) throw InputError("cannot write " + path.string());
    out << response_column;
    for (const auto& name : d.names) out << ',' << name;
    out << '\n' << std::setprecision(17);
    for (int i = 0; i < d.n(); ++i) {
        out << static_cast<int>(d.y[i]);
        for (int j = 0; j < d.p(); ++j) out << ',' << d.x(i, j);
        out << '\n';
    }
}

void standardize_columns(Matrix& x) {
    const auto n = x.rows();
    if (n < 2) return;
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
        const double mean = x.col(j).mean();
        const double var = (x.col(j).array() - mean).square().sum() / static_cast<double>(n - 1);
        if (var > 0.0) x.col(j) /= std::sqrt(var);
    }
}

void SimScenario::validate() const {
    if (n < 1 || p < 1) throw InputError("scenario needs n >= 1 and p >= 1");
    if (s < 0 || s > p) throw InputError("scenario needs 0 <= s <= p");
    if (const auto* iid = std::get_if<IidGaussian>(&design); iid && !(iid->sigma > 0.0))
        throw InputError("iid design needs sigma > 0");
    if (const auto* ar = std::get_if<Ar1Gaussian>(&design); ar && !(ar->r >= 0.0 && ar->r < 1.0))
        throw InputError("ar1 design needs r in [0, 1)");
    if (const auto* u = std::get_if<UniformSignal>(&signal); u && !(u->lo <= u->hi))
        throw InputError("uniform signal needs lo <= hi");
}

Design generate_design(const SimScenario& scenario, Rng& rng) {
    scenario.validate();
    const int n = scenario.n;
    const int p = scenario.p;
    std::normal_distribution<double> std_normal(0.0, 1.0);

    Design out;
    out.x.resize(n, p);
    // Row-major draw order so a row is a single draw of the covariate vector.
    if (const auto* iid = std::get_if<IidGaussian>(&scenario.design)) {
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < p; ++j) out.x(i, j) = iid->sigma * std_normal(rng);
    } else {
        const double r = std::get<Ar1Gaussian>(scenario.design).r;
        Matrix sigma(p, p);
        for (int a = 0; a < p; ++a)
            for (int b = 0; b < p; ++b) sigma(a, b) = std::pow(r, std::abs(a - b));
        const Matrix lower = sigma.llt().matrixL();
        Vector z(p);
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j < p; ++j) z[j] = std_normal(rng);
            out.x.row(i) = (lower * z).transpose();
        }
    }

    out.beta_star = Vector::Zero(p);
    if (const auto* fixed = std::get_if<FixedSignal>(&scenario.signal)) {
        out.beta_star.head(scenario.s).setConstant(fixed->amplitude);
    } else {
        const auto& u = std::get<UniformSignal>(scenario.signal);
        std::uniform_real_distribution<double> unif(u.lo, u.hi);
        for (int j = 0; j < scenario.s; ++j) out.beta_star[j] = unif(rng);
    }
    out.s_star = Configuration::leading(scenario.s);
    return out;
}

Vector sample_response(const Matrix& x, const Vector& beta_star, Rng& rng) {
    if (x.cols() != beta_star.size()) throw ShapeMismatch("beta* length does not match columns of x");
    const Vector eta = x * beta_star;
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    Vector y(x.rows());
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
        const double prob = 1.0 / (1.0 + std::exp(-eta[i]));
        y[i] = unif(rng) < prob ? 1.0 : 0.0;
    }
    return y;
}

Simulated simulate(const SimScenario& scenario) {
    Rng rng(scenario.seed);
    Design design = generate_design(scenario, rng);
    Vector y = sample_response(design.x, design.beta_star, rng);
    Simulated out{make_dataset(std::move(design.x), std::move(y)), std::move(design.beta_star),
                  std::move(design.s_star)};
    return out;
}

}  // namespace ebvi
