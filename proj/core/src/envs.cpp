#include "rpglab/envs.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <json.hpp>

#include "rpglab/env_constants.hpp"
#include "rpglab/surrogate.hpp"

namespace rpglab {

void Env::check_state(const Vector& x) const {
    require(x.size() == spec().state_dim, "env: state has wrong dimension");
    require(all_finite(x), "env: non-finite state");
}

Vector Env::reset(RngStream& rng) {
    state_ = sample_initial(rng);
    check_state(state_);
    t_ = 0;
    done_ = false;
    return state_;
}

Transition Env::step(int action) {
    require(!done_, "env: step() after episode end, call reset()");
    check_state(state_);
    Transition tr;
    tr.state = state_;
    tr.action = action;
    tr.next_state = dynamics(state_, action);
    check_state(tr.next_state);
    t_ += 1;
    tr.reached_terminal = terminal(tr.next_state);
    tr.done = tr.reached_terminal || t_ >= spec().horizon;
    tr.reward = true_reward(tr.next_state, t_, tr.done);
    tr.surrogate = surrogate_reward(tr.next_state, t_, tr.done, &tr.surrogate_grad);
    state_ = tr.next_state;
    done_ = tr.done;
    return tr;
}

namespace {

// ---------------------------------------------------------------------------
// Cart-pole. State (x, xdot, theta, thetadot), two force actions.

class CartPoleEnv : public Env {
public:
    explicit CartPoleEnv(const EnvOptions& opts) : opts_(opts) {
        namespace c = constants::cartpole;
        spec_.id = "cartpole";
        spec_.state_dim = 4;
        spec_.actions = {true, 2, 0};
        spec_.horizon = opts.horizon.value_or(c::horizon);
        spec_.solve_threshold = c::solve_threshold;
        spec_.dt = c::tau;
    }

    const EnvSpec& spec() const override { return spec_; }
    std::unique_ptr<Env> clone() const override { return std::make_unique<CartPoleEnv>(*this); }

    Vector dynamics(const Vector& s, int action) const override {
        namespace c = constants::cartpole;
        check_state(s);
        require(action == 0 || action == 1, "cartpole: action must be 0 or 1");
        const double x = s(0), xdot = s(1), theta = s(2), thetadot = s(3);
        const double force = action == 1 ? c::force_mag : -c::force_mag;
        const double costh = std::cos(theta);
        const double sinth = std::sin(theta);
        const double total_mass = c::mass_cart + c::mass_pole;
        const double polemass_length = c::mass_pole * c::half_pole_length;
        const double temp = (force + polemass_length * thetadot * thetadot * sinth) / total_mass;
        const double thetaacc = (c::gravity * sinth - costh * temp) /
                                (c::half_pole_length *
                                 (4.0 / 3.0 - c::mass_pole * costh * costh / total_mass));
        const double xacc = temp - polemass_length * thetaacc * costh / total_mass;
        Vector out(4);
        out(0) = x + c::tau * xdot;
        out(1) = xdot + c::tau * xacc;
        out(2) = theta + c::tau * thetadot;
        out(3) = thetadot + c::tau * thetaacc;
        return out;
    }

    bool terminal(const Vector& s) const override {
        namespace c = constants::cartpole;
        return std::abs(s(0)) > c::x_threshold || std::abs(s(2)) > c::theta_threshold;
    }

    double true_reward(const Vector&, int, bool) const override { return 1.0; }

    // Product of sigmoids on the normalized angle and track margins: close to 1
    // while balanced and centred, falling smoothly towards 0 at the limits.
    double surrogate_reward(const Vector& s, int, bool, Vector* grad) const override {
        namespace c = constants::cartpole;
        const double a = opts_.surrogate_sharpness;
        const double x = s(0), theta = s(2);
        const double hx = 1.0 - (x / c::x_threshold) * (x / c::x_threshold);
        const double ht = 1.0 - (theta / c::theta_threshold) * (theta / c::theta_threshold);
        const double sx = sigmoid(a * hx);
        const double st = sigmoid(a * ht);
        if (grad) {
            grad->setZero(4);
            (*grad)(0) = opts_.surrogate_scale * st * a * sigmoid_deriv(a * hx) *
                         (-2.0 * x / (c::x_threshold * c::x_threshold));
            (*grad)(2) = opts_.surrogate_scale * sx * a * sigmoid_deriv(a * ht) *
                         (-2.0 * theta / (c::theta_threshold * c::theta_threshold));
        }
        return opts_.surrogate_scale * sx * st;
    }

    Vector sample_initial(RngStream& rng) const override {
        Vector s(4);
        for (int i = 0; i < 4; ++i) s(i) = rng.uniform(-0.05, 0.05);
        return s;
    }

private:
    EnvSpec spec_;
    EnvOptions opts_;
};

// ---------------------------------------------------------------------------
// Acrobot. Public state is the 6-d observation
// (cos q1, sin q1, cos q2, sin q2, q1dot, q2dot); angles measured from the
// hanging position. Internally one RK4 step of the two-link equations of
// motion, torque on the elbow joint.

class AcrobotEnv : public Env {
public:
    explicit AcrobotEnv(const EnvOptions& opts) : opts_(opts) {
        namespace c = constants::acrobot;
        spec_.id = "acrobot";
        spec_.state_dim = 6;
        spec_.actions = {true, 3, 0};
        spec_.horizon = opts.horizon.value_or(c::horizon);
        spec_.solve_threshold = c::solve_threshold;
        spec_.dt = c::dt;
    }

    const EnvSpec& spec() const override { return spec_; }
    std::unique_ptr<Env> clone() const override { return std::make_unique<AcrobotEnv>(*this); }

    Vector dynamics(const Vector& s, int action) const override {
        namespace c = constants::acrobot;
        check_state(s);
        require(action >= 0 && action < 3, "acrobot: action must be in {0,1,2}");
        const double torque = c::torques[action];

        Eigen::Vector4d q;
        q << std::atan2(s(1), s(0)), std::atan2(s(3), s(2)), s(4), s(5);

        // Single RK4 step with the torque held constant.
        const Eigen::Vector4d k1 = deriv(q, torque);
        const Eigen::Vector4d k2 = deriv(q + 0.5 * c::dt * k1, torque);
        const Eigen::Vector4d k3 = deriv(q + 0.5 * c::dt * k2, torque);
        const Eigen::Vector4d k4 = deriv(q + c::dt * k3, torque);
        Eigen::Vector4d qn = q + (c::dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);

        qn(0) = wrap_pi(qn(0));
        qn(1) = wrap_pi(qn(1));
        qn(2) = std::clamp(qn(2), -c::max_vel_1, c::max_vel_1);
        qn(3) = std::clamp(qn(3), -c::max_vel_2, c::max_vel_2);

        Vector out(6);
        out << std::cos(qn(0)), std::sin(qn(0)), std::cos(qn(1)), std::sin(qn(1)), qn(2), qn(3);
        return out;
    }

    bool terminal(const Vector& s) const override { return tip_margin(s) > 0.0; }

    double true_reward(const Vector& s, int, bool) const override {
        return terminal(s) ? 0.0 : -1.0;
    }

    // sigmoid(alpha * tip height margin) - 1: roughly -1 while hanging, rising
    // to 0 as the tip approaches the target line one link-length above the
    // pivot. Shifted so the surrogate return tracks the true cost scale.
    double surrogate_reward(const Vector& s, int, bool, Vector* grad) const override {
        const double a = opts_.surrogate_sharpness;
        const double h = tip_margin(s);
        if (grad) {
            grad->setZero(6);
            const double d = opts_.surrogate_scale * a * sigmoid_deriv(a * h);
            (*grad)(0) = d * (-1.0 - s(2));
            (*grad)(1) = d * s(3);
            (*grad)(2) = d * (-s(0));
            (*grad)(3) = d * s(1);
        }
        return opts_.surrogate_scale * (sigmoid(a * h) - 1.0);
    }

    Vector sample_initial(RngStream& rng) const override {
        Eigen::Vector4d q;
        for (int i = 0; i < 4; ++i) q(i) = rng.uniform(-0.1, 0.1);
        Vector s(6);
        s << std::cos(q(0)), std::sin(q(0)), std::cos(q(1)), std::sin(q(1)), q(2), q(3);
        return s;
    }

private:
    // Tip height above the pivot minus the target height (one link length):
    // -cos q1 - cos(q1 + q2) - 1, written in terms of the observation.
    static double tip_margin(const Vector& s) {
        return -s(0) - (s(0) * s(2) - s(1) * s(3)) - 1.0;
    }

    static double wrap_pi(double x) {
        const double two_pi = 2.0 * std::numbers::pi;
        double y = std::fmod(x + std::numbers::pi, two_pi);
        if (y < 0) y += two_pi;
        return y - std::numbers::pi;
    }

    static Eigen::Vector4d deriv(const Eigen::Vector4d& q, double torque) {
        namespace c = constants::acrobot;
        const double m1 = c::link_mass_1, m2 = c::link_mass_2;
        const double l1 = c::link_length_1;
        const double lc1 = c::link_com_1, lc2 = c::link_com_2;
        const double i1 = c::link_moi, i2 = c::link_moi;
        const double g = c::gravity;
        const double theta1 = q(0), theta2 = q(1), dtheta1 = q(2), dtheta2 = q(3);

        const double d1 = m1 * lc1 * lc1 +
                          m2 * (l1 * l1 + lc2 * lc2 + 2.0 * l1 * lc2 * std::cos(theta2)) + i1 + i2;
        const double d2 = m2 * (lc2 * lc2 + l1 * lc2 * std::cos(theta2)) + i2;
        const double phi2 = m2 * lc2 * g * std::cos(theta1 + theta2 - std::numbers::pi / 2.0);
        const double phi1 = -m2 * l1 * lc2 * dtheta2 * dtheta2 * std::sin(theta2) -
                            2.0 * m2 * l1 * lc2 * dtheta2 * dtheta1 * std::sin(theta2) +
                            (m1 * lc1 + m2 * l1) * g * std::cos(theta1 - std::numbers::pi / 2.0) + phi2;
        const double ddtheta2 =
            (torque + d2 / d1 * phi1 - m2 * l1 * lc2 * dtheta1 * dtheta1 * std::sin(theta2) -
             phi2) /
            (m2 * lc2 * lc2 + i2 - d2 * d2 / d1);
        const double ddtheta1 = -(d2 * ddtheta2 + phi1) / d1;
        return {dtheta1, dtheta2, ddtheta1, ddtheta2};
    }

    EnvSpec spec_;
    EnvOptions opts_;
};

// ---------------------------------------------------------------------------
// Mountain car. State (position, velocity), three throttle actions.

class MountainCarEnv : public Env {
public:
    explicit MountainCarEnv(const EnvOptions& opts) : opts_(opts) {
        namespace c = constants::mountaincar;
        spec_.id = "mountaincar";
        spec_.state_dim = 2;
        spec_.actions = {true, 3, 0};
        spec_.horizon = opts.horizon.value_or(c::horizon);
        spec_.solve_threshold = c::solve_threshold;
        spec_.dt = 1.0;
    }

    const EnvSpec& spec() const override { return spec_; }
    std::unique_ptr<Env> clone() const override { return std::make_unique<MountainCarEnv>(*this); }

    Vector dynamics(const Vector& s, int action) const override {
        namespace c = constants::mountaincar;
        check_state(s);
        require(action >= 0 && action < 3, "mountaincar: action must be in {0,1,2}");
        double pos = s(0), vel = s(1);
        vel += (action - 1) * c::force - std::cos(3.0 * pos) * c::gravity;
        vel = std::clamp(vel, -c::max_speed, c::max_speed);
        pos += vel;
        pos = std::clamp(pos, c::min_position, c::max_position);
        if (pos <= c::min_position && vel < 0.0) vel = 0.0;
        Vector out(2);
        out << pos, vel;
        return out;
    }

    bool terminal(const Vector& s) const override {
        namespace c = constants::mountaincar;
        return s(0) >= c::goal_position && s(1) >= 0.0;
    }

    double true_reward(const Vector&, int, bool) const override { return -1.0; }

    // sigmoid(alpha * (position - goal)) - 1, matching the -1 per step cost
    // away from the goal.
    double surrogate_reward(const Vector& s, int, bool, Vector* grad) const override {
        namespace c = constants::mountaincar;
        const double a = opts_.surrogate_sharpness;
        const double h = s(0) - c::goal_position;
        if (grad) {
            grad->setZero(2);
            (*grad)(0) = opts_.surrogate_scale * a * sigmoid_deriv(a * h);
        }
        return opts_.surrogate_scale * (sigmoid(a * h) - 1.0);
    }

    Vector sample_initial(RngStream& rng) const override {
        Vector s(2);
        s << rng.uniform(-0.6, -0.4), 0.0;
        return s;
    }

private:
    EnvSpec spec_;
    EnvOptions opts_;
};

// ---------------------------------------------------------------------------
// Hand-mass. A point mass on a damped spring whose anchor (the hand) moves in
// discrete steps in the plane; the mass must be parked on a target while the
// hand returns to the origin. State (hx, hy, mx, my, vx, vy); terminal
// quadratic cost only.

class HandMassEnv : public Env {
public:
    explicit HandMassEnv(const EnvOptions& opts) : opts_(opts) {
        namespace c = constants::handmass;
        spec_.id = "handmass";
        spec_.state_dim = 6;
        spec_.actions = {true, 4, 0};
        spec_.horizon = opts.horizon.value_or(c::horizon);
        spec_.dt = c::dt;
    }

    const EnvSpec& spec() const override { return spec_; }
    std::unique_ptr<Env> clone() const override { return std::make_unique<HandMassEnv>(*this); }

    Vector dynamics(const Vector& s, int action) const override {
        namespace c = constants::handmass;
        check_state(s);
        require(action >= 0 && action < 4, "handmass: action must be in {0,1,2,3}");
        Vector out = s;
        const int axis = action / 2;
        const double dir = action % 2 == 0 ? 1.0 : -1.0;
        out(axis) += dir * c::hand_step;
        // Semi-implicit Euler for the spring-damper.
        for (int i = 0; i < 2; ++i) {
            const double f = c::spring_k * (out(i) - out(2 + i)) - c::damping * out(4 + i);
            out(4 + i) += c::dt * f / c::mass;
            out(2 + i) += c::dt * out(4 + i);
        }
        return out;
    }

    double true_reward(const Vector& s, int, bool is_final) const override {
        namespace c = constants::handmass;
        if (!is_final) return 0.0;
        const double dx = s(2) - c::target_x, dy = s(3) - c::target_y;
        return -(dx * dx + dy * dy) - (s(0) * s(0) + s(1) * s(1));
    }

    // Already smooth: the surrogate is the true terminal cost.
    double surrogate_reward(const Vector& s, int t, bool is_final, Vector* grad) const override {
        namespace c = constants::handmass;
        if (grad) {
            grad->setZero(6);
            if (is_final) {
                (*grad)(0) = -2.0 * s(0);
                (*grad)(1) = -2.0 * s(1);
                (*grad)(2) = -2.0 * (s(2) - c::target_x);
                (*grad)(3) = -2.0 * (s(3) - c::target_y);
            }
        }
        return true_reward(s, t, is_final);
    }

    Vector sample_initial(RngStream&) const override { return Vector::Zero(6); }

private:
    EnvSpec spec_;
    EnvOptions opts_;
};

} // namespace

std::unique_ptr<Env> make_env(const std::string& id, const EnvOptions& opts) {
    if (id == "cartpole") return std::make_unique<CartPoleEnv>(opts);
    if (id == "acrobot") return std::make_unique<AcrobotEnv>(opts);
    if (id == "mountaincar") return std::make_unique<MountainCarEnv>(opts);
    if (id == "handmass") return std::make_unique<HandMassEnv>(opts);
    throw ContractViolation("unknown env id: " + id +
                            " (expected cartpole|acrobot|mountaincar|handmass)");
}

std::vector<std::string> env_ids() { return {"cartpole", "acrobot", "mountaincar", "handmass"}; }

std::string env_constants_json(const std::string& id) {
    nlohmann::json j;
    j["id"] = id;
    if (id == "cartpole") {
        namespace c = constants::cartpole;
        j["gravity"] = c::gravity;
        j["mass_cart"] = c::mass_cart;
        j["mass_pole"] = c::mass_pole;
        j["half_pole_length"] = c::half_pole_length;
        j["force_mag"] = c::force_mag;
        j["tau"] = c::tau;
        j["theta_threshold"] = c::theta_threshold;
        j["x_threshold"] = c::x_threshold;
        j["horizon"] = c::horizon;
        j["solve_threshold"] = c::solve_threshold;
    } else if (id == "acrobot") {
        namespace c = constants::acrobot;
        j["link_mass_1"] = c::link_mass_1;
        j["link_mass_2"] = c::link_mass_2;
        j["link_length_1"] = c::link_length_1;
        j["link_length_2"] = c::link_length_2;
        j["link_com_1"] = c::link_com_1;
        j["link_com_2"] = c::link_com_2;
        j["link_moi"] = c::link_moi;
        j["gravity"] = c::gravity;
        j["dt"] = c::dt;
        j["max_vel_1"] = c::max_vel_1;
        j["max_vel_2"] = c::max_vel_2;
        j["torques"] = {c::torques[0], c::torques[1], c::torques[2]};
        j["horizon"] = c::horizon;
        j["solve_threshold"] = c::solve_threshold;
    } else if (id == "mountaincar") {
        namespace c = constants::mountaincar;
        j["min_position"] = c::min_position;
        j["max_position"] = c::max_position;
        j["max_speed"] = c::max_speed;
        j["goal_position"] = c::goal_position;
        j["force"] = c::force;
        j["gravity"] = c::gravity;
        j["horizon"] = c::horizon;
        j["solve_threshold"] = c::solve_threshold;
    } else if (id == "handmass") {
        namespace c = constants::handmass;
        j["spring_k"] = c::spring_k;
        j["mass"] = c::mass;
        j["damping"] = c::damping;
        j["hand_step"] = c::hand_step;
        j["dt"] = c::dt;
        j["target_x"] = c::target_x;
        j["target_y"] = c::target_y;
        j["horizon"] = c::horizon;
    } else {
        throw ContractViolation("unknown env id: " + id);
    }
    return j.dump(2) + "\n";
}

} // namespace rpglab
