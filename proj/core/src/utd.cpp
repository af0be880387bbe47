#include "v2xdose/utd.hpp"

#include <algorithm>
#include <cmath>

#include "v2xdose/fresnel.hpp"

namespace v2xdose {

namespace {

constexpr double kSqrtHalfPi = 1.2533141373155002512;

// (1/2 - C(u)) + j(1/2 - S(u)) for u >= 0, computed without cancellation for large u.
Complex fresnel_tail(double u) {
    if (u <= 1.5) {
        const FresnelCS f = fresnel_integrals(u);
        return {0.5 - f.c, 0.5 - f.s};
    }
    // Continued fraction for the complementary error function (modified Lentz).
    constexpr double kTiny = 1e-300;
    const double pix2 = kPi * u * u;
    Complex b{1.0, -pix2};
    Complex cc = 1.0 / kTiny;
    Complex d = 1.0 / b;
    Complex h = d;
    int n = -1;
    for (int k = 2; k < 200; ++k) {
        n += 2;
        const double a = -static_cast<double>(n) * (n + 1);
        b += 4.0;
        d = 1.0 / (a * d + b);
        cc = b + a / cc;
        const Complex del = cc * d;
        h *= del;
        if (std::abs(del.real() - 1.0) + std::abs(del.imag()) < 1e-16) break;
    }
    h *= Complex{u, -u};
    const Complex e{std::cos(0.5 * pix2), std::sin(0.5 * pix2)};
    return Complex{0.5, 0.5} * e * h;
}

double cot(double x) { return std::cos(x) / std::sin(x); }

// One of the four cot * F terms; `sign` is +1 for the (pi + beta) terms.
Complex kp_term(double n, double beta, int sign, double kl) {
    const double arg = kPi + sign * beta;
    // N chosen so that 2 pi n N - beta = +-pi is most nearly satisfied.
    const double nn = std::round((beta + sign * kPi) / (2.0 * kPi * n));
    const double eps = sign > 0 ? arg - 2.0 * kPi * n * nn : arg + 2.0 * kPi * n * nn;
    if (std::abs(eps) < 1e-5) {
        // Limit near a shadow or reflection boundary.
        const Complex e4 = std::exp(Complex{0.0, kPi / 4.0});
        const double sgn = eps >= 0.0 ? 1.0 : -1.0;
        return n * (std::sqrt(2.0 * kPi * kl) * sgn - 2.0 * kl * eps * e4) * e4;
    }
    const double c = std::cos((2.0 * kPi * n * nn - beta) / 2.0);
    const double a = 2.0 * c * c;
    return cot(arg / (2.0 * n)) * utd_transition(kl * a);
}

FaceReflection face_reflection(const Material& m, double frequency_hz, double grazing) {
    grazing = std::clamp(grazing, 0.0, kPi / 2.0);
    const double theta_i = std::min(kPi / 2.0 - grazing, kPi / 2.0 - 1e-12);
    // Soft (E parallel to the edge) sees the face as TE, hard as TM.
    return {fresnel_reflection(m, frequency_hz, theta_i, Polarization::TE),
            fresnel_reflection(m, frequency_hz, theta_i, Polarization::TM)};
}

}  // namespace

FresnelCS fresnel_integrals(double u) {
    const double ax = std::abs(u);
    FresnelCS r;
    if (ax < 1e-150) {
        r = {u, 0.0};
        return r;
    }
    if (ax <= 1.5) {
        // Power series, alternating between the cosine and sine partial sums.
        const double fact = kPi / 2.0 * ax * ax;
        double sum = 0.0;
        double sums = 0.0;
        double sumc = ax;
        double sign = 1.0;
        double term = ax;
        bool odd = true;
        for (int k = 1, n = 3; k < 200; ++k, n += 2) {
            term *= fact / k;
            sum += sign * term / n;
            const double test = std::abs(sum) * 1e-17;
            if (odd) {
                sign = -sign;
                sums = sum;
                sum = sumc;
            } else {
                sumc = sum;
                sum = sums;
            }
            if (term < test) break;
            odd = !odd;
        }
        r = {sumc, sums};
    } else {
        const Complex t = fresnel_tail(ax);
        r = {0.5 - t.real(), 0.5 - t.imag()};
    }
    if (u < 0.0) r = {-r.c, -r.s};
    return r;
}

Complex utd_transition(double x) {
    if (x <= 0.0) return {0.0, 0.0};
    const double sx = std::sqrt(x);
    const double u = sx * std::sqrt(2.0 / kPi);
    // int_{sqrt X}^inf e^{-j t^2} dt = sqrt(pi/2) * conj(tail(u)).
    const Complex integral = kSqrtHalfPi * std::conj(fresnel_tail(u));
    return Complex{0.0, 2.0 * sx} * std::exp(Complex{0.0, x}) * integral;
}

WedgeCoefficients wedge_coefficients(double n, double phi, double phi_prime, double beta0, double L, double k,
                                     const FaceReflection& face0, const FaceReflection& facen) {
    const double kl = k * L;
    const double bm = phi - phi_prime;
    const double bp = phi + phi_prime;
    const Complex t1 = kp_term(n, bm, +1, kl);
    const Complex t2 = kp_term(n, bm, -1, kl);
    const Complex t3 = kp_term(n, bp, -1, kl);
    const Complex t4 = kp_term(n, bp, +1, kl);
    const Complex pre = -std::exp(Complex{0.0, -kPi / 4.0}) / (2.0 * n * std::sqrt(2.0 * kPi * k) * std::sin(beta0));

    WedgeCoefficients out;
    out.soft = pre * (t1 + t2 + face0.soft * t3 + facen.soft * t4);
    out.hard = pre * (t1 + t2 + face0.hard * t3 + facen.hard * t4);
    return out;
}

std::optional<EdgeDiffraction> utd_diffraction(const Wedge& wedge, const Material& face0, const Material& facen,
                                               double frequency_hz, const Vec3& s_in, const Vec3& s_out,
                                               double s_prime, double s) {
    const Vec3& e = wedge.direction;
    const double b_in = std::acos(std::clamp(dot(s_in, e), -1.0, 1.0));
    const double b_out = std::acos(std::clamp(dot(s_out, e), -1.0, 1.0));
    if (std::abs(b_in - b_out) > 1e-3) return std::nullopt;
    const double beta0 = 0.5 * (b_in + b_out);
    if (std::sin(beta0) < 1e-6) return std::nullopt;

    // phi' is the angle of the source direction as seen from the edge.
    const double phi_prime = wedge.angle_of(-s_in);
    const double phi = wedge.angle_of(s_out);
    const double limit = wedge.n * kPi + 1e-9;
    if (phi_prime > limit || phi > limit) return std::nullopt;

    const double k = 2.0 * kPi * frequency_hz / kSpeedOfLight;
    const double sb = std::sin(beta0);
    const double L = s * s_prime * sb * sb / (s + s_prime);

    const double nn = wedge.n;
    const FaceReflection r0 = face_reflection(face0, frequency_hz, std::min(phi_prime, kPi - phi_prime));
    const double pn = nn * kPi - phi;
    const FaceReflection rn = face_reflection(facen, frequency_hz, std::min(pn, kPi - pn));

    EdgeDiffraction out;
    out.d = wedge_coefficients(nn, phi, phi_prime, beta0, L, k, r0, rn);
    out.phi = phi;
    out.phi_prime = phi_prime;
    out.beta0 = beta0;
    return out;
}

FieldVector diffract_field(const FieldVector& e, const Vec3& edge_dir, const Vec3& s_in, const Vec3& s_out,
                           const WedgeCoefficients& d) {
    Vec3 f_in = -cross(edge_dir, s_in);
    Vec3 f_out = cross(edge_dir, s_out);
    f_in = f_in / norm(f_in);
    f_out = f_out / norm(f_out);
    const Vec3 b_in = cross(s_in, f_in);
    const Vec3 b_out = cross(s_out, f_out);
    return (-d.soft * e.along(b_in)) * b_out + (-d.hard * e.along(f_in)) * f_out;
}

}  // namespace v2xdose
