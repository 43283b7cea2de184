#![allow(dead_code)]

use lq_stackelberg::model::{CoefficientSnapshot, GameSpec, RawGame};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

/// Scalar cost weights of one player.
#[derive(Debug, Clone, Copy, Default)]
pub struct ScalarCost {
    pub q: f64,
    pub m1: f64,
    pub m2: f64,
    pub r11: f64,
    pub r12: f64,
    pub r22: f64,
    pub q_lin: f64,
    pub rho1: f64,
    pub rho2: f64,
}

/// Scalar game at one instant plus costate data, evaluated with plain f64
/// arithmetic so it can serve as an oracle for the matrix code.
#[derive(Debug, Clone, Copy, Default)]
pub struct ScalarPoint {
    pub a: f64,
    pub b1: f64,
    pub b2: f64,
    pub b: f64,
    pub c: f64,
    pub d1: f64,
    pub d2: f64,
    pub lambda: f64,
    pub cost: [ScalarCost; 2],
    pub p: [f64; 2],
    pub hess: [f64; 2],
    pub x: f64,
}

impl ScalarPoint {
    pub fn h(&self, i: usize, mu: f64, nu: f64) -> f64 {
        let x = self.x;
        let k = &self.cost[i];
        let f = self.a * x + self.b1 * mu + self.b2 * nu + self.b;
        let sigma = self.c * x + self.d1 * mu + self.d2 * nu + self.lambda;
        let g = 0.5
            * (k.q * x * x + 2.0 * k.m1 * mu * x + 2.0 * k.m2 * nu * x + k.r11 * mu * mu + 2.0 * k.r12 * mu * nu + k.r22 * nu * nu)
            + k.q_lin * x
            + k.rho1 * mu
            + k.rho2 * nu;
        self.p[i] * f + 0.5 * self.hess[i] * sigma * sigma + g
    }

    /// Second derivative of the follower Hamiltonian in its own control.
    pub fn follower_curvature(&self) -> f64 {
        self.hess[1] * self.d2 * self.d2 + self.cost[1].r22
    }

    /// Follower minimizer by one Newton step on the exact quadratic.
    pub fn follower_argmin(&self, mu: f64) -> f64 {
        let h = 1.0;
        let g = (self.h(1, mu, h) - self.h(1, mu, -h)) / (2.0 * h);
        -g / self.follower_curvature()
    }

    pub fn leader_reduced(&self, mu: f64) -> f64 {
        self.h(0, mu, self.follower_argmin(mu))
    }

    pub fn leader_curvature(&self) -> f64 {
        self.leader_reduced(1.0) + self.leader_reduced(-1.0) - 2.0 * self.leader_reduced(0.0)
    }

    pub fn raw(&self) -> RawGame {
        let mut raw = RawGame::new(1, 1, 1, 0.0, 1.0)
            .dynamics("A", self.a)
            .dynamics("B1", self.b1)
            .dynamics("B2", self.b2)
            .dynamics("b", self.b)
            .dynamics("C", self.c)
            .dynamics("D1", self.d1)
            .dynamics("D2", self.d2)
            .dynamics("lambda", self.lambda);
        for (i, k) in self.cost.iter().enumerate() {
            for (key, v) in [
                ("Q", k.q),
                ("M1", k.m1),
                ("M2", k.m2),
                ("R11", k.r11),
                ("R12", k.r12),
                ("R22", k.r22),
                ("q", k.q_lin),
                ("rho1", k.rho1),
                ("rho2", k.rho2),
            ] {
                raw = if i == 0 { raw.cost1(key, v) } else { raw.cost2(key, v) };
            }
        }
        raw
    }

    pub fn game(&self) -> GameSpec {
        self.raw().validate().expect("scalar point is a valid game")
    }

    pub fn snapshot(&self) -> CoefficientSnapshot {
        self.game().snapshot(0.5).unwrap()
    }

    pub fn costates(&self) -> lq_stackelberg::hamiltonian::CostateInputs {
        lq_stackelberg::hamiltonian::CostateInputs::new(
            DVector::from_element(1, self.p[0]),
            DVector::from_element(1, self.p[1]),
            DMatrix::from_element(1, 1, self.hess[0]),
            DMatrix::from_element(1, 1, self.hess[1]),
        )
        .unwrap()
    }
}

fn unit() -> impl Strategy<Value = f64> {
    -1.0..1.0f64
}

fn scalar_cost() -> impl Strategy<Value = ScalarCost> {
    (
        (unit(), unit(), unit(), 0.1..2.0f64, unit(), 0.1..2.0f64),
        (unit(), unit(), unit()),
    )
        .prop_map(|((q, m1, m2, r11, r12, r22), (q_lin, rho1, rho2))| ScalarCost {
            q,
            m1,
            m2,
            r11,
            r12,
            r22,
            q_lin,
            rho1,
            rho2,
        })
}

/// Random scalar instant with every coefficient active.
pub fn scalar_point() -> impl Strategy<Value = ScalarPoint> {
    (
        (unit(), unit(), unit(), unit(), unit(), unit(), unit(), unit()),
        scalar_cost(),
        scalar_cost(),
        (-2.0..2.0f64, -2.0..2.0f64, -0.5..2.0f64, -0.5..2.0f64, -3.0..3.0f64),
    )
        .prop_map(|((a, b1, b2, b, c, d1, d2, lambda), c1, c2, (p1, p2, h1, h2, x))| ScalarPoint {
            a,
            b1,
            b2,
            b,
            c,
            d1,
            d2,
            lambda,
            cost: [c1, c2],
            p: [p1, p2],
            hess: [h1, h2],
            x,
        })
}

/// Random scalar instant whose follower and leader curvatures both exceed
/// `margin`.
pub fn convex_scalar_point(margin: f64) -> impl Strategy<Value = ScalarPoint> {
    scalar_point().prop_filter("convexity margins", move |pt| {
        pt.follower_curvature() > margin && pt.leader_curvature() > margin
    })
}

pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / (1.0 + a.abs().max(b.abs()))
}

pub fn m(v: f64) -> DMatrix<f64> {
    DMatrix::from_element(1, 1, v)
}

pub fn v(x: f64) -> DVector<f64> {
    DVector::from_element(1, x)
}

/// Random symmetric matrix with entries in `[-scale, scale]`.
pub fn sym_matrix(n: usize, scale: f64) -> impl Strategy<Value = DMatrix<f64>> {
    proptest::collection::vec(-scale..scale, n * n).prop_map(move |e| {
        let a = DMatrix::from_vec(n, n, e);
        (&a + a.transpose()) * 0.5
    })
}

pub fn matrix(rows: usize, cols: usize, scale: f64) -> impl Strategy<Value = DMatrix<f64>> {
    proptest::collection::vec(-scale..scale, rows * cols).prop_map(move |e| DMatrix::from_vec(rows, cols, e))
}
