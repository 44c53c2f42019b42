//! Signal temporal logic over uniformly sampled signals.
//!
//! Formulas combine a closed vocabulary of distance predicates with Boolean
//! and bounded temporal operators. Both qualitative (Boolean) and
//! quantitative (robustness) semantics are evaluated on the sample grid:
//! `always` windows are rounded outward to grid points and `eventually`
//! windows inward, so discretization never reports satisfaction that the
//! dense-time formula would reject.

mod eval;
mod parse;

pub use eval::{
    eval_boolean, eval_ma_robustness, eval_ma_stl, eval_robustness, streaming_monitor, Monitor,
};
pub use parse::{parse_formula, ParseError};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geom;

#[derive(Debug, Error)]
pub enum FormulaError {
    #[error("interval [{lo}, {hi}] is malformed: bounds must satisfy 0 <= lo <= hi < inf")]
    BadInterval { lo: f64, hi: f64 },
    #[error("predicate parameter is not finite")]
    NonFiniteParam,
    #[error("box half-extents must be strictly positive")]
    NonPositiveHalfExtent,
    #[error("pairwise predicate requires two distinct robot indices, got {0}")]
    PairwiseSameRobot(usize),
    #[error("half-space normal must be nonzero")]
    ZeroNormal,
    #[error("agent({robot}) wraps a subformula that is not single-robot")]
    AgentOverTeamFormula { robot: usize },
}

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("no sample falls in the effective interval [{lo}, {hi}]")]
    EmptyInterval { lo: f64, hi: f64 },
    #[error("evaluation time {t} lies outside the sampled span")]
    TimeOutOfSpan { t: f64 },
    #[error("robot {robot} is not carried by this signal layout")]
    RobotNotInSignal { robot: usize },
    #[error("goal predicate for robot {robot} has no bound goal position")]
    UnboundGoal { robot: usize },
    #[error("agent({robot}) atoms are team-level; evaluate with the multi-robot entry points")]
    AgentInSignalEval { robot: usize },
    #[error("no trajectory provided for robot {robot}")]
    MissingTrajectory { robot: usize },
    #[error("trajectories must share dt, t0, and length for team-level evaluation")]
    TrajectoryMismatch,
    #[error("sample has dimension {got}, layout requires {want}")]
    SampleDimension { got: usize, want: usize },
    #[error("signal must have dt > 0 and at least one sample")]
    BadSignal,
    #[error("window for step {step} needs samples through index {needed}, have {have}")]
    InsufficientHorizon {
        step: usize,
        needed: usize,
        have: usize,
    },
    #[error("sample contains a non-finite value")]
    NonFiniteSample,
}

/// Closed temporal interval `[lo, hi]` in seconds with `0 <= lo <= hi`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    lo: f64,
    hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Result<Self, FormulaError> {
        if !(lo.is_finite() && hi.is_finite()) || lo < 0.0 || lo > hi {
            return Err(FormulaError::BadInterval { lo, hi });
        }
        Ok(Self { lo, hi })
    }

    /// Degenerate interval pinning a single instant.
    pub fn at(t: f64) -> Result<Self, FormulaError> {
        Self::new(t, t)
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }
}

/// Atomic predicates over robot positions. Every margin is in meters (or the
/// predicate's native unit) and the atom is satisfied when the margin is
/// nonnegative.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Predicate {
    /// `||p_robot - point||_inf > threshold`
    DistToPointAbove {
        robot: usize,
        point: [f64; 2],
        threshold: f64,
    },
    /// max-norm distance to an axis-aligned box exceeds `threshold`
    DistToBoxAbove {
        robot: usize,
        center: [f64; 2],
        half: [f64; 2],
        threshold: f64,
    },
    /// `||p_first - p_second||_inf > threshold`
    PairwiseDistAbove {
        first: usize,
        second: usize,
        threshold: f64,
    },
    /// `normal . p_robot <= offset`, margin normalized by `||normal||_2`
    HalfSpace {
        robot: usize,
        normal: [f64; 2],
        offset: f64,
    },
    /// `||p_robot - goal||_inf < radius`; the goal may be bound after parsing
    WithinGoalRadius {
        robot: usize,
        goal: Option<[f64; 2]>,
        radius: f64,
    },
}

impl Predicate {
    pub fn validate(&self) -> Result<(), FormulaError> {
        let finite = |xs: &[f64]| xs.iter().all(|x| x.is_finite());
        match self {
            Predicate::DistToPointAbove {
                point, threshold, ..
            } => {
                if !finite(point) || !threshold.is_finite() {
                    return Err(FormulaError::NonFiniteParam);
                }
            }
            Predicate::DistToBoxAbove {
                center,
                half,
                threshold,
                ..
            } => {
                if !finite(center) || !finite(half) || !threshold.is_finite() {
                    return Err(FormulaError::NonFiniteParam);
                }
                if half[0] <= 0.0 || half[1] <= 0.0 {
                    return Err(FormulaError::NonPositiveHalfExtent);
                }
            }
            Predicate::PairwiseDistAbove {
                first,
                second,
                threshold,
            } => {
                if !threshold.is_finite() {
                    return Err(FormulaError::NonFiniteParam);
                }
                if first == second {
                    return Err(FormulaError::PairwiseSameRobot(*first));
                }
            }
            Predicate::HalfSpace { normal, offset, .. } => {
                if !finite(normal) || !offset.is_finite() {
                    return Err(FormulaError::NonFiniteParam);
                }
                if normal[0] == 0.0 && normal[1] == 0.0 {
                    return Err(FormulaError::ZeroNormal);
                }
            }
            Predicate::WithinGoalRadius { goal, radius, .. } => {
                if !radius.is_finite() || goal.map_or(false, |g| !finite(&g)) {
                    return Err(FormulaError::NonFiniteParam);
                }
            }
        }
        Ok(())
    }

    /// True when the predicate references more than one robot's position.
    pub fn is_pairwise(&self) -> bool {
        matches!(self, Predicate::PairwiseDistAbove { .. })
    }

    /// Satisfaction margin of the atom against one sample vector.
    pub fn margin(&self, sample: &[f64], layout: &SignalLayout) -> Result<f64, EvalError> {
        match self {
            Predicate::DistToPointAbove {
                robot,
                point,
                threshold,
            } => {
                let p = layout.position(sample, *robot)?;
                Ok(geom::linf(&p, point) - threshold)
            }
            Predicate::DistToBoxAbove {
                robot,
                center,
                half,
                threshold,
            } => {
                let p = layout.position(sample, *robot)?;
                Ok(geom::dist_inf_to_box(&p, center, half) - threshold)
            }
            Predicate::PairwiseDistAbove {
                first,
                second,
                threshold,
            } => {
                let a = layout.position(sample, *first)?;
                let b = layout.position(sample, *second)?;
                Ok(geom::linf(&a, &b) - threshold)
            }
            Predicate::HalfSpace {
                robot,
                normal,
                offset,
            } => {
                let p = layout.position(sample, *robot)?;
                let norm = (normal[0] * normal[0] + normal[1] * normal[1]).sqrt();
                Ok((offset - (normal[0] * p[0] + normal[1] * p[1])) / norm)
            }
            Predicate::WithinGoalRadius {
                robot,
                goal,
                radius,
            } => {
                let p = layout.position(sample, *robot)?;
                let g = goal.ok_or(EvalError::UnboundGoal { robot: *robot })?;
                Ok(radius - geom::linf(&p, &g))
            }
        }
    }
}

/// STL / MA-STL abstract syntax tree.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Formula {
    True,
    Atom(Predicate),
    Not(Box<Formula>),
    And(Box<Formula>, Box<Formula>),
    Or(Box<Formula>, Box<Formula>),
    Eventually(Interval, Box<Formula>),
    Always(Interval, Box<Formula>),
    Until(Interval, Box<Formula>, Box<Formula>),
    /// Team-level atom assigning a single-robot subformula to one robot.
    Agent(usize, Box<Formula>),
}

impl Formula {
    pub fn atom(p: Predicate) -> Self {
        Formula::Atom(p)
    }

    pub fn not(f: Formula) -> Self {
        Formula::Not(Box::new(f))
    }

    pub fn and(a: Formula, b: Formula) -> Self {
        Formula::And(Box::new(a), Box::new(b))
    }

    pub fn or(a: Formula, b: Formula) -> Self {
        Formula::Or(Box::new(a), Box::new(b))
    }

    pub fn eventually(iv: Interval, f: Formula) -> Self {
        Formula::Eventually(iv, Box::new(f))
    }

    pub fn always(iv: Interval, f: Formula) -> Self {
        Formula::Always(iv, Box::new(f))
    }

    pub fn until(iv: Interval, a: Formula, b: Formula) -> Self {
        Formula::Until(iv, Box::new(a), Box::new(b))
    }

    pub fn agent(robot: usize, f: Formula) -> Self {
        Formula::Agent(robot, Box::new(f))
    }

    /// Conjunction of an iterator of formulas; `True` when empty.
    pub fn and_all<I: IntoIterator<Item = Formula>>(items: I) -> Formula {
        let mut iter = items.into_iter();
        let first = match iter.next() {
            Some(f) => f,
            None => return Formula::True,
        };
        iter.fold(first, Formula::and)
    }

    /// Checks predicate invariants and the MA-STL layering rule: `agent`
    /// atoms may wrap only single-robot subformulas.
    pub fn validate(&self) -> Result<(), FormulaError> {
        self.validate_inner(false)
    }

    fn validate_inner(&self, inside_agent: bool) -> Result<(), FormulaError> {
        match self {
            Formula::True => Ok(()),
            Formula::Atom(p) => p.validate(),
            Formula::Not(f) => f.validate_inner(inside_agent),
            Formula::And(a, b) | Formula::Or(a, b) => {
                a.validate_inner(inside_agent)?;
                b.validate_inner(inside_agent)
            }
            Formula::Eventually(_, f) | Formula::Always(_, f) => f.validate_inner(inside_agent),
            Formula::Until(_, a, b) => {
                a.validate_inner(inside_agent)?;
                b.validate_inner(inside_agent)
            }
            Formula::Agent(robot, f) => {
                if inside_agent || !f.is_single_robot() {
                    return Err(FormulaError::AgentOverTeamFormula { robot: *robot });
                }
                f.validate_inner(true)
            }
        }
    }

    fn is_single_robot(&self) -> bool {
        match self {
            Formula::True => true,
            Formula::Atom(p) => !p.is_pairwise(),
            Formula::Not(f) | Formula::Eventually(_, f) | Formula::Always(_, f) => {
                f.is_single_robot()
            }
            Formula::And(a, b) | Formula::Or(a, b) | Formula::Until(_, a, b) => {
                a.is_single_robot() && b.is_single_robot()
            }
            Formula::Agent(..) => false,
        }
    }

    /// Time needed beyond the evaluation instant to decide the formula.
    pub fn time_horizon(&self) -> f64 {
        match self {
            Formula::True | Formula::Atom(_) => 0.0,
            Formula::Not(f) | Formula::Agent(_, f) => f.time_horizon(),
            Formula::And(a, b) | Formula::Or(a, b) => a.time_horizon().max(b.time_horizon()),
            Formula::Eventually(iv, f) | Formula::Always(iv, f) => iv.hi() + f.time_horizon(),
            Formula::Until(iv, a, b) => iv.hi() + a.time_horizon().max(b.time_horizon()),
        }
    }

    /// Substitutes scenario goal positions into unbound goal predicates.
    pub fn bind_goals(&self, goals: &[[f64; 2]]) -> Formula {
        match self {
            Formula::Atom(Predicate::WithinGoalRadius {
                robot,
                goal: None,
                radius,
            }) => Formula::Atom(Predicate::WithinGoalRadius {
                robot: *robot,
                goal: goals.get(*robot).copied(),
                radius: *radius,
            }),
            Formula::True | Formula::Atom(_) => self.clone(),
            Formula::Not(f) => Formula::not(f.bind_goals(goals)),
            Formula::And(a, b) => Formula::and(a.bind_goals(goals), b.bind_goals(goals)),
            Formula::Or(a, b) => Formula::or(a.bind_goals(goals), b.bind_goals(goals)),
            Formula::Eventually(iv, f) => Formula::eventually(*iv, f.bind_goals(goals)),
            Formula::Always(iv, f) => Formula::always(*iv, f.bind_goals(goals)),
            Formula::Until(iv, a, b) => {
                Formula::until(*iv, a.bind_goals(goals), b.bind_goals(goals))
            }
            Formula::Agent(r, f) => Formula::agent(*r, f.bind_goals(goals)),
        }
    }
}

/// How robot positions are packed into each sample vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum SignalLayout {
    /// One robot; position occupies components 0..2 and any robot index
    /// resolves to it (the signal IS that robot's trajectory). Samples may
    /// carry trailing state components (heading, speed, ...).
    Single,
    /// Joint pair sample `[t, x_first, y_first, x_second, y_second]`.
    Pair { first: usize, second: usize },
    /// Team sample `[x_0, y_0, x_1, y_1, ...]` for robots `0..robots`.
    Team { robots: usize },
}

impl SignalLayout {
    pub fn min_dimension(&self) -> usize {
        match self {
            SignalLayout::Single => 2,
            SignalLayout::Pair { .. } => 5,
            SignalLayout::Team { robots } => 2 * robots,
        }
    }

    fn position(&self, sample: &[f64], robot: usize) -> Result<[f64; 2], EvalError> {
        match self {
            SignalLayout::Single => Ok([sample[0], sample[1]]),
            SignalLayout::Pair { first, second } => {
                if robot == *first {
                    Ok([sample[1], sample[2]])
                } else if robot == *second {
                    Ok([sample[3], sample[4]])
                } else {
                    Err(EvalError::RobotNotInSignal { robot })
                }
            }
            SignalLayout::Team { robots } => {
                if robot < *robots {
                    Ok([sample[2 * robot], sample[2 * robot + 1]])
                } else {
                    Err(EvalError::RobotNotInSignal { robot })
                }
            }
        }
    }
}

/// Uniformly sampled signal: sample `k` is taken at `t0 + k * dt`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Signal {
    samples: Vec<Vec<f64>>,
    dt: f64,
    t0: f64,
    layout: SignalLayout,
}

impl Signal {
    pub fn new(
        samples: Vec<Vec<f64>>,
        dt: f64,
        t0: f64,
        layout: SignalLayout,
    ) -> Result<Self, EvalError> {
        if !(dt > 0.0) || !dt.is_finite() || !t0.is_finite() || samples.is_empty() {
            return Err(EvalError::BadSignal);
        }
        let dim = samples[0].len();
        let want = layout.min_dimension();
        for s in &samples {
            if s.len() != dim {
                return Err(EvalError::SampleDimension {
                    got: s.len(),
                    want: dim,
                });
            }
            if s.iter().any(|x| !x.is_finite()) {
                return Err(EvalError::NonFiniteSample);
            }
        }
        if dim < want {
            return Err(EvalError::SampleDimension { got: dim, want });
        }
        Ok(Self {
            samples,
            dt,
            t0,
            layout,
        })
    }

    /// Single-robot signal from position (or full state) samples at t0 = 0.
    pub fn single(samples: Vec<Vec<f64>>, dt: f64) -> Result<Self, EvalError> {
        Self::new(samples, dt, 0.0, SignalLayout::Single)
    }

    pub fn samples(&self) -> &[Vec<f64>] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn layout(&self) -> &SignalLayout {
        &self.layout
    }

    /// Last covered instant, `t0 + (len - 1) * dt`.
    pub fn end_time(&self) -> f64 {
        self.t0 + (self.samples.len() - 1) as f64 * self.dt
    }
}
