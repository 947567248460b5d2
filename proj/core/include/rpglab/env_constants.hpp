#pragma once

// Physical constants for all environments, collected in one place so runs can
// be audited against a single source. Cart Pole, Acrobot and Mountain Car use
// the constants of the OpenAI Gym implementations (CartPole-v1, Acrobot-v1,
// MountainCar-v0). Hand Mass constants are chosen for this repository.

namespace rpglab::constants {

namespace cartpole {
// OpenAI Gym CartPole-v1 (classic_control/cartpole.py)
inline constexpr double gravity = 9.8;
inline constexpr double mass_cart = 1.0;
inline constexpr double mass_pole = 0.1;
inline constexpr double half_pole_length = 0.5;
inline constexpr double force_mag = 10.0;
inline constexpr double tau = 0.02;            // Euler step, seconds
inline constexpr double theta_threshold = 12.0 * 3.14159265358979323846 / 180.0;
inline constexpr double x_threshold = 2.4;
inline constexpr int horizon = 500;            // v1 episode cap
inline constexpr double solve_threshold = 495.0;
} // namespace cartpole

namespace acrobot {
// OpenAI Gym Acrobot-v1 (classic_control/acrobot.py), "book" dynamics
inline constexpr double link_length_1 = 1.0;
inline constexpr double link_length_2 = 1.0;
inline constexpr double link_mass_1 = 1.0;
inline constexpr double link_mass_2 = 1.0;
inline constexpr double link_com_1 = 0.5;
inline constexpr double link_com_2 = 0.5;
inline constexpr double link_moi = 1.0;
inline constexpr double gravity = 9.8;
inline constexpr double dt = 0.2;              // RK4 step, seconds
inline constexpr double max_vel_1 = 4.0 * 3.14159265358979323846;
inline constexpr double max_vel_2 = 9.0 * 3.14159265358979323846;
inline constexpr double torques[3] = {-1.0, 0.0, 1.0};
inline constexpr int horizon = 500;
inline constexpr double solve_threshold = -105.0;
} // namespace acrobot

namespace mountaincar {
// OpenAI Gym MountainCar-v0 (classic_control/mountain_car.py)
inline constexpr double min_position = -1.2;
inline constexpr double max_position = 0.6;
inline constexpr double max_speed = 0.07;
inline constexpr double goal_position = 0.5;
inline constexpr double force = 0.001;
inline constexpr double gravity = 0.0025;
inline constexpr int horizon = 200;
inline constexpr double solve_threshold = -110.0; // gym leaderboard convention
} // namespace mountaincar

namespace handmass {
// Hand-plus-spring-mass system; constants chosen for this repository (the
// task description leaves them open). Hand moves in four directions by a
// fixed step, the mass follows through a damped spring.
inline constexpr double spring_k = 1.0;
inline constexpr double mass = 1.0;
inline constexpr double damping = 0.1;
inline constexpr double hand_step = 0.05;      // hand displacement per action
inline constexpr double dt = 0.05;
inline constexpr double target_x = 0.5;
inline constexpr double target_y = 0.5;
inline constexpr int horizon = 50;
} // namespace handmass

} // namespace rpglab::constants
