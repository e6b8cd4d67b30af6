use super::features::{cost, Beta, FeatureVector};

/// Meal index 0..3 is breakfast, lunch, dinner.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AgentKind {
    Basal,
    Icr(usize),
    Ps(usize),
}

impl AgentKind {
    /// Bundle order: basal, ICR1..3, PS1..3.
    pub const ALL: [AgentKind; 7] = [
        AgentKind::Basal,
        AgentKind::Icr(0),
        AgentKind::Icr(1),
        AgentKind::Icr(2),
        AgentKind::Ps(0),
        AgentKind::Ps(1),
        AgentKind::Ps(2),
    ];

    /// Basal and the dinner ICR see the overnight delta as well.
    pub fn state_dim(self) -> usize {
        match self {
            AgentKind::Basal | AgentKind::Icr(2) => 4,
            _ => 2,
        }
    }

    pub fn name(self) -> String {
        match self {
            AgentKind::Basal => "basal".to_string(),
            AgentKind::Icr(i) => format!("icr{}", i + 1),
            AgentKind::Ps(i) => format!("ps{}", i + 1),
        }
    }

    pub fn from_name(s: &str) -> Option<AgentKind> {
        AgentKind::ALL.into_iter().find(|k| k.name() == s)
    }

    /// Sign of each policy coordinate that moves the dose in the corrective
    /// direction: hyperglycaemia towards more insulin (lower ICR, higher PS
    /// and basal), hypoglycaemia towards less.
    pub fn corrective_signs(self) -> Vec<f64> {
        let pair = match self {
            AgentKind::Icr(_) => [-1.0, 1.0],
            AgentKind::Ps(_) | AgentKind::Basal => [1.0, -1.0],
        };
        pair.iter().cycle().take(self.state_dim()).copied().collect()
    }

    pub fn index(self) -> usize {
        match self {
            AgentKind::Basal => 0,
            AgentKind::Icr(i) => 1 + i,
            AgentKind::Ps(i) => 4 + i,
        }
    }
}

/// Concatenate features with the overnight delta for the 4-dimensional agents.
/// A missing delta counts as no evidence.
pub fn build_state(kind: AgentKind, f: &FeatureVector, b_k: Option<[f64; 2]>) -> Vec<f64> {
    let mut s = vec![f.hyper, f.hypo];
    if kind.state_dim() == 4 {
        let b = b_k.unwrap_or_else(|| {
            log::warn!("{}: no overnight delta, using zeros", kind.name());
            [0.0, 0.0]
        });
        s.extend_from_slice(&b);
    }
    s
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hyperparams {
    pub lr_actor: f64,
    pub lr_critic: f64,
    /// Action smoothing m.
    pub smoothing: f64,
    pub alpha_sp: f64,
    pub gamma: f64,
    pub lambda: f64,
}

impl Default for Hyperparams {
    fn default() -> Self {
        Hyperparams {
            lr_actor: 0.1,
            lr_critic: 0.1,
            smoothing: 0.5,
            alpha_sp: 0.1,
            gamma: 0.9,
            lambda: 0.5,
        }
    }
}

pub const ADAM_BETA1: f64 = 0.9;
pub const ADAM_BETA2: f64 = 0.999;
pub const ADAM_EPS: f64 = 1e-8;
/// Floor on |s_i| in the policy gradient.
pub const GRADIENT_STATE_FLOOR: f64 = 0.05;

#[derive(Debug, Clone, PartialEq)]
pub struct AgentState {
    pub kind: AgentKind,
    pub theta: Vec<f64>,
    pub w: Vec<f64>,
    pub z: Vec<f64>,
    pub adam_m: Vec<f64>,
    pub adam_v: Vec<f64>,
    /// Adam steps taken.
    pub step_count: u64,
    pub hp: Hyperparams,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

impl AgentState {
    pub fn new(kind: AgentKind, theta: Vec<f64>, w: Vec<f64>, z: Vec<f64>, hp: Hyperparams) -> Self {
        let n = kind.state_dim();
        assert!(theta.len() == n && w.len() == n && z.len() == n, "dimension mismatch for {}", kind.name());
        AgentState {
            kind,
            theta,
            w,
            z,
            adam_m: vec![0.0; n],
            adam_v: vec![0.0; n],
            step_count: 0,
            hp,
        }
    }

    pub fn value(&self, s: &[f64]) -> f64 {
        dot(&self.w, s)
    }
}

/// TD(λ) step with an explicit cost. Returns the TD error, or `None` (and
/// leaves the agent untouched) when it is not finite.
pub fn td_update(agent: &mut AgentState, s_t: &[f64], s_next: &[f64], c_next: f64) -> Option<f64> {
    debug_assert_eq!(s_t.len(), agent.w.len());
    debug_assert_eq!(s_next.len(), agent.w.len());
    let hp = agent.hp;
    let d = c_next + hp.gamma * agent.value(s_next) - agent.value(s_t);
    if !d.is_finite() {
        log::error!("{}: non-finite TD error, agent frozen for this step", agent.kind.name());
        return None;
    }
    for i in 0..agent.w.len() {
        agent.w[i] += hp.lr_critic * d * agent.z[i];
        agent.z[i] = hp.lambda * agent.z[i] + s_next[i];
    }
    Some(d)
}

/// Critic update charging the cost of `s_next`.
pub fn critic_update(agent: &mut AgentState, s_t: &[f64], s_next: &[f64], beta: &Beta) -> Option<f64> {
    td_update(agent, s_t, s_next, cost(s_next, beta))
}

/// Supervisory policy and its weight for a previous-day feature vector,
/// evaluated as a first-match cascade.
pub fn supervisory(f_prev: &FeatureVector, alpha_sp: f64) -> (f64, f64) {
    let [h, l] = f_prev.as_array();
    if h == 0.0 && l == 0.0 {
        (0.0, 0.0)
    } else if (h > 0.0 && l == 0.0) || h > l {
        (-alpha_sp * h, 0.5)
    } else if (l > 0.0 && h == 0.0) || l > h {
        (alpha_sp * l, 0.5)
    } else {
        (0.0, 1.0)
    }
}

/// Relative change P proposed for the agent's quantity.
pub fn policy(agent: &AgentState, s_t: &[f64], f_prev: &FeatureVector) -> f64 {
    let lp = dot(&agent.theta, s_t);
    match agent.kind {
        AgentKind::Icr(_) => {
            let (sp, alpha_lp) = supervisory(f_prev, agent.hp.alpha_sp);
            alpha_lp * lp + (1.0 - alpha_lp) * sp
        }
        AgentKind::Basal | AgentKind::Ps(_) => lp,
    }
}

/// g_i = d / s_i with |s_i| floored.
pub fn policy_gradient(td_error: f64, s_t: &[f64]) -> Vec<f64> {
    s_t.iter()
        .map(|&s| {
            let mag = s.abs().max(GRADIENT_STATE_FLOOR);
            td_error / if s < 0.0 { -mag } else { mag }
        })
        .collect()
}

/// One Adam descent step on θ followed by the sign projection. Returns the
/// Adam increment before projection. A zero gradient only decays the moments.
pub fn actor_update(agent: &mut AgentState, td_error: f64, s_t: &[f64]) -> Vec<f64> {
    let g = policy_gradient(td_error, s_t);
    let mut step = vec![0.0; g.len()];
    if g.iter().any(|v| !v.is_finite()) {
        log::error!("{}: non-finite policy gradient, actor update skipped", agent.kind.name());
        return step;
    }
    if g.iter().all(|&v| v == 0.0) {
        for i in 0..g.len() {
            agent.adam_m[i] *= ADAM_BETA1;
            agent.adam_v[i] *= ADAM_BETA2;
        }
        return step;
    }
    agent.step_count += 1;
    let t = agent.step_count as i32;
    let (c1, c2) = (1.0 - ADAM_BETA1.powi(t), 1.0 - ADAM_BETA2.powi(t));
    for i in 0..g.len() {
        agent.adam_m[i] = ADAM_BETA1 * agent.adam_m[i] + (1.0 - ADAM_BETA1) * g[i];
        agent.adam_v[i] = ADAM_BETA2 * agent.adam_v[i] + (1.0 - ADAM_BETA2) * g[i] * g[i];
        let m_hat = agent.adam_m[i] / c1;
        let v_hat = agent.adam_v[i] / c2;
        step[i] = -agent.hp.lr_actor * m_hat / (v_hat.sqrt() + ADAM_EPS);
        agent.theta[i] += step[i];
    }
    project_corrective(agent);
    step
}

/// Keep every policy coordinate on its corrective side of zero.
fn project_corrective(agent: &mut AgentState) {
    for (t, s) in agent.theta.iter_mut().zip(agent.kind.corrective_signs()) {
        if *t * s < 0.0 {
            *t = 0.0;
        }
    }
}

/// Apply a relative change to `current`, clamp to `[a_init/2, 2·a_init]`; for
/// the basal agent a result below a quarter of yesterday's total daily dose
/// keeps the current value.
pub fn apply_action(kind: AgentKind, p: f64, current: f64, a_init: f64, smoothing: f64, prev_tdd: Option<f64>) -> f64 {
    let proposal = current + smoothing * p * current;
    let proposal = if proposal.is_finite() { proposal } else { current };
    let clamped = proposal.clamp(0.5 * a_init, 2.0 * a_init);
    match (kind, prev_tdd) {
        (AgentKind::Basal, Some(tdd)) if clamped < 0.25 * tdd => current,
        _ => clamped,
    }
}
