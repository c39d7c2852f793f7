#pragma once

// Nonlinearities f(t, x) and the homotopy fields built from them.

#include "resonance/expr.hpp"
#include "resonance/spectrum.hpp"

#include <memory>

namespace resonance {

enum class Domain { full_line, singular };

inline const char* to_string(Domain d) { return d == Domain::full_line ? "full_line" : "singular"; }

/// A T-periodic nonlinearity f(t, x). Singular models live on x > 0.
class NonlinearityModel {
public:
    using Fn = std::function<double(double, double)>;

    NonlinearityModel() = default;

    NonlinearityModel(std::string name, double T, Domain domain, int N, Fn f)
        : name_(std::move(name)), T_(T), domain_(domain), N_(N), f_(std::move(f))
    {
        if (!(T_ > 0)) throw InvalidArgument("period must be positive");
        if (N_ < 1) throw InvalidArgument("N must be >= 1");
    }

    /// Single expression model.
    static NonlinearityModel from_expr(std::string name, double T, Domain domain, int N, const Expr& e)
    {
        auto shared = std::make_shared<const Expr>(e);
        NonlinearityModel m(std::move(name), T, domain, N, [shared](double t, double x) { return (*shared)(t, x); });
        m.exprs_ = {e.str()};
        return m;
    }

    /// Piecewise model: `left` for x < split, `right` for x >= split.
    static NonlinearityModel piecewise(std::string name, double T, Domain domain, int N, const Expr& left,
                                       const Expr& right, double split)
    {
        auto l = std::make_shared<const Expr>(left);
        auto r = std::make_shared<const Expr>(right);
        NonlinearityModel m(std::move(name), T, domain, N,
                            [l, r, split](double t, double x) { return x < split ? (*l)(t, x) : (*r)(t, x); });
        m.exprs_ = {left.str(), right.str()};
        return m;
    }

    /// Convenience: parse then build. Right-hand piece is optional.
    static NonlinearityModel parse_model(std::string name, double T, Domain domain, int N, const std::string& f,
                                         const std::map<std::string, double>& constants = {})
    {
        return from_expr(std::move(name), T, domain, N, parse(f, constants));
    }

    static NonlinearityModel parse_piecewise(std::string name, double T, Domain domain, int N,
                                             const std::string& left, const std::string& right,
                                             const std::map<std::string, double>& constants = {})
    {
        const double split = domain == Domain::full_line ? 0.0 : 1.0;
        return piecewise(std::move(name), T, domain, N, parse(left, constants), parse(right, constants), split);
    }

    double operator()(double t, double x) const
    {
        if (domain_ == Domain::singular && !(x > 0))
            throw DomainError("x", "singular model evaluated at x <= 0");
        return f_(t, x);
    }

    const std::string& name() const noexcept { return name_; }
    double T() const noexcept { return T_; }
    Domain domain() const noexcept { return domain_; }
    int N() const noexcept { return N_; }
    const std::vector<std::string>& expressions() const noexcept { return exprs_; }

    double mu_N() const { return eigenvalue(N_, T_); }
    double mu_N1() const { return eigenvalue(N_ + 1, T_); }
    /// Midpoint (mu_N + mu_{N+1}) / 2 used by the comparison field.
    double mu_mid() const { return 0.5 * (mu_N() + mu_N1()); }

    /// Same model with a scaled nonlinearity c*f.
    NonlinearityModel scaled(double c) const
    {
        Fn f = f_;
        NonlinearityModel m(name_ + "*" + fmt_shortest(c), T_, domain_, N_, [f, c](double t, double x) { return c * f(t, x); });
        return m;
    }

    /// Same model with N changed.
    NonlinearityModel with_N(int N) const
    {
        NonlinearityModel m = *this;
        if (N < 1) throw InvalidArgument("N must be >= 1");
        m.N_ = N;
        return m;
    }

private:
    std::string name_ = "zero";
    double T_ = 2.0 * pi;
    Domain domain_ = Domain::full_line;
    int N_ = 1;
    Fn f_ = [](double, double) { return 0.0; };
    std::vector<std::string> exprs_;
};

/// g_lambda = lambda f + (1 - lambda) h with the comparison nonlinearity h.
class HomotopyField {
public:
    HomotopyField(NonlinearityModel model, double lambda) : model_(std::move(model)), lambda_(lambda)
    {
        if (!(lambda_ >= 0.0 && lambda_ <= 1.0)) throw InvalidArgument("lambda must lie in [0, 1]");
        mu_ = model_.mu_mid();
    }

    /// Field equal to f itself.
    static HomotopyField exact(NonlinearityModel model) { return HomotopyField(std::move(model), 1.0); }

    const NonlinearityModel& model() const noexcept { return model_; }
    double lambda() const noexcept { return lambda_; }
    Domain regime() const noexcept { return model_.domain(); }
    double T() const noexcept { return model_.T(); }
    double mu() const noexcept { return mu_; }

    HomotopyField at(double lambda) const { return HomotopyField(model_, lambda); }

    /// Comparison nonlinearity h(t, x).
    double h(double t, double x) const
    {
        if (model_.domain() == Domain::full_line) {
            if (x > 0) return mu_ * x;
            const double f = model_(t, x);
            if (x < -1) return f;
            return mu_ * x + x * (mu_ * x - f);
        }
        if (!(x > 0)) throw DomainError("x", "singular field evaluated at x <= 0");
        if (x > 1) return mu_ * x;
        const double f = model_(t, x);
        if (x < 0.5) return f;
        return (2 * x - 1) * mu_ * x + (2 - 2 * x) * f;
    }

    double operator()(double t, double x) const
    {
        if (lambda_ == 1.0) return model_(t, x);
        if (lambda_ == 0.0) return h(t, x);
        return lambda_ * model_(t, x) + (1 - lambda_) * h(t, x);
    }

private:
    NonlinearityModel model_;
    double lambda_;
    double mu_;
};

inline double g_lambda(const HomotopyField& field, double t, double x) { return field(t, x); }

} // namespace resonance
