use std::f64::consts::TAU;
use std::io::{self, Write};

use serde::{Deserialize, Serialize};

use super::field::RfField;
use crate::error::{Error, Result};
use crate::surface::Vec3;
use crate::units::IonSpecies;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct State {
    pub position: Vec3,
    pub velocity: Vec3,
}

impl State {
    pub fn at_rest(position: Vec3) -> Self {
        Self {
            position,
            velocity: Vec3::zeros(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegratorConfig {
    /// RK4 steps per rf period; at least 100.
    pub steps_per_cycle: usize,
    /// Stored samples per rf period; at least 20 and a divisor of `steps_per_cycle`.
    pub samples_per_cycle: usize,
    /// Escape radius around the starting point (m).
    pub max_excursion: f64,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self {
            steps_per_cycle: 200,
            samples_per_cycle: 40,
            max_excursion: 1e-3,
        }
    }
}

impl IntegratorConfig {
    fn validate(&self) -> Result<()> {
        if self.steps_per_cycle < 100 {
            return Err(Error::Validation(format!(
                "need at least 100 steps per rf cycle, got {}",
                self.steps_per_cycle
            )));
        }
        if self.samples_per_cycle < 20
            || !self.steps_per_cycle.is_multiple_of(self.samples_per_cycle)
        {
            return Err(Error::Validation(format!(
                "samples per cycle ({}) must be at least 20 and divide the step count ({})",
                self.samples_per_cycle, self.steps_per_cycle
            )));
        }
        if !(self.max_excursion > 0.0) {
            return Err(Error::Validation("escape radius must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub positions: Vec<Vec3>,
    pub velocities: Vec<Vec3>,
    pub samples_per_cycle: usize,
    pub omega_rf: f64,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn duration(&self) -> f64 {
        match (self.times.first(), self.times.last()) {
            (Some(a), Some(b)) => b - a,
            _ => 0.0,
        }
    }

    pub fn sample_interval(&self) -> f64 {
        TAU / self.omega_rf / self.samples_per_cycle as f64
    }

    pub fn final_state(&self) -> Option<State> {
        Some(State {
            position: *self.positions.last()?,
            velocity: *self.velocities.last()?,
        })
    }

    /// Comma-separated `t,x,y,z,vx,vy,vz` in SI units.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "t,x,y,z,vx,vy,vz")?;
        for ((t, p), v) in self.times.iter().zip(&self.positions).zip(&self.velocities) {
            writeln!(
                w,
                "{t:e},{:e},{:e},{:e},{:e},{:e},{:e}",
                p.x, p.y, p.z, v.x, v.y, v.z
            )?;
        }
        Ok(())
    }

    /// Secular energy per rf cycle (J): effective potential at the cycle-averaged
    /// position plus kinetic energy of the secular velocity, taken as the central
    /// difference of neighbouring cycle averages.
    pub fn secular_energies<F: RfField + ?Sized>(
        &self,
        field: &F,
        species: &IonSpecies,
    ) -> Result<Vec<f64>> {
        let n = self.samples_per_cycle;
        let cycles = (self.len().saturating_sub(1)) / n;
        let period = TAU / self.omega_rf;
        // trapezoidal average over each full period
        let means: Vec<Vec3> = (0..cycles)
            .map(|c| {
                let s = &self.positions[c * n..=(c + 1) * n];
                (s.iter().sum::<Vec3>() - (s[0] + s[n]) * 0.5) / n as f64
            })
            .collect();
        (1..cycles.saturating_sub(1))
            .map(|c| {
                let v = (means[c + 1] - means[c - 1]) / (2.0 * period);
                Ok(0.5 * species.mass() * v.norm_squared()
                    + field.effective_energy(species, &means[c])?)
            })
            .collect()
    }

    /// Relative change of the mean secular energy between the first and last
    /// quarter of the run.
    pub fn secular_energy_drift<F: RfField + ?Sized>(
        &self,
        field: &F,
        species: &IonSpecies,
    ) -> Result<f64> {
        let e = self.secular_energies(field, species)?;
        let q = e.len() / 4;
        if q == 0 {
            return Err(Error::Resolution {
                required: 12.0 * TAU / self.omega_rf,
            });
        }
        let head = e[..q].iter().sum::<f64>() / q as f64;
        let tail = e[e.len() - q..].iter().sum::<f64>() / q as f64;
        Ok((tail - head).abs() / head.abs())
    }
}

fn acceleration<F: RfField + ?Sized>(field: &F, qm: f64, p: &Vec3, t: f64) -> Result<Vec3> {
    Ok(field.field(p, t)? * qm)
}

fn rk4_step<F: RfField + ?Sized>(field: &F, qm: f64, s: &State, t: f64, dt: f64) -> Result<State> {
    let a1 = acceleration(field, qm, &s.position, t)?;
    let p2 = s.position + s.velocity * (dt / 2.0);
    let v2 = s.velocity + a1 * (dt / 2.0);
    let a2 = acceleration(field, qm, &p2, t + dt / 2.0)?;
    let p3 = s.position + v2 * (dt / 2.0);
    let v3 = s.velocity + a2 * (dt / 2.0);
    let a3 = acceleration(field, qm, &p3, t + dt / 2.0)?;
    let p4 = s.position + v3 * dt;
    let v4 = s.velocity + a3 * dt;
    let a4 = acceleration(field, qm, &p4, t + dt)?;
    Ok(State {
        position: s.position + (s.velocity + v2 * 2.0 + v3 * 2.0 + v4) * (dt / 6.0),
        velocity: s.velocity + (a1 + a2 * 2.0 + a3 * 2.0 + a4) * (dt / 6.0),
    })
}

/// Integrate `m r̈ = q E(r, t)` from `t = 0` for `duration` seconds.
pub fn integrate<F: RfField + ?Sized>(
    field: &F,
    species: &IonSpecies,
    initial: State,
    duration: f64,
    config: &IntegratorConfig,
) -> Result<Trajectory> {
    config.validate()?;
    let omega = field.omega_rf();
    let period = TAU / omega;
    if !(duration >= 10.0 * period * (1.0 - 1e-12)) {
        return Err(Error::Validation(format!(
            "duration {duration:e} s is shorter than 10 rf periods ({:e} s)",
            10.0 * period
        )));
    }
    check_state(field, &initial, &initial, 0.0, config.max_excursion)?;
    let dt = period / config.steps_per_cycle as f64;
    let stride = config.steps_per_cycle / config.samples_per_cycle;
    let steps = (duration / dt).round() as usize;
    let qm = species.charge_to_mass();
    let mut traj = Trajectory {
        times: Vec::with_capacity(steps / stride + 1),
        positions: Vec::with_capacity(steps / stride + 1),
        velocities: Vec::with_capacity(steps / stride + 1),
        samples_per_cycle: config.samples_per_cycle,
        omega_rf: omega,
    };
    let mut s = initial;
    traj.times.push(0.0);
    traj.positions.push(s.position);
    traj.velocities.push(s.velocity);
    for k in 0..steps {
        let t = k as f64 * dt;
        s = rk4_step(field, qm, &s, t, dt).map_err(|_| Error::Escape { time: t })?;
        check_state(field, &s, &initial, t + dt, config.max_excursion)?;
        if (k + 1) % stride == 0 {
            traj.times.push((k + 1) as f64 * dt);
            traj.positions.push(s.position);
            traj.velocities.push(s.velocity);
        }
    }
    Ok(traj)
}

/// Propagate a state from `t0` to `t1` (either direction) without storing samples.
pub fn propagate<F: RfField + ?Sized>(
    field: &F,
    species: &IonSpecies,
    state: State,
    t0: f64,
    t1: f64,
    steps_per_cycle: usize,
) -> Result<State> {
    let period = TAU / field.omega_rf();
    let n = (((t1 - t0).abs() / period) * steps_per_cycle as f64)
        .ceil()
        .max(1.0) as usize;
    let dt = (t1 - t0) / n as f64;
    let qm = species.charge_to_mass();
    let mut s = state;
    for k in 0..n {
        let t = t0 + k as f64 * dt;
        s = rk4_step(field, qm, &s, t, dt).map_err(|_| Error::Escape { time: t })?;
    }
    Ok(s)
}

fn check_state<F: RfField + ?Sized>(
    field: &F,
    s: &State,
    start: &State,
    t: f64,
    radius: f64,
) -> Result<()> {
    let finite = s
        .position
        .iter()
        .chain(s.velocity.iter())
        .all(|v| v.is_finite());
    if !finite
        || (s.position - start.position).norm() > radius
        || (field.bounded_by_surface() && s.position.y <= 0.0)
    {
        return Err(Error::Escape { time: t });
    }
    Ok(())
}
