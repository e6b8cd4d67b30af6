use std::collections::BTreeMap;
use std::fmt::Write as _;

use rand::Rng;

use super::agent::{actor_update, apply_action, build_state, critic_update, policy, AgentKind, AgentState, Hyperparams};
use super::dosing::TherapyParams;
use super::features::{Beta, FeatureVector};
use crate::error::{Error, Result};

pub const CHECKPOINT_TAG: &str = "abba-agent-bundle";
pub const CHECKPOINT_VERSION: u32 = 1;

/// Relative spread of the initial critic weights around the cost-to-go of a
/// stationary state, and upper end of the uniform draw for the remaining
/// critic coordinates and the eligibility trace.
pub const CRITIC_INIT_SPREAD: f64 = 0.1;

/// The seven agents of one subject together with the therapy they steer.
#[derive(Debug, Clone, PartialEq)]
pub struct AgentBundle {
    /// Indexed by [`AgentKind::index`].
    pub agents: Vec<AgentState>,
    /// State the last action was taken from, awaiting its transition.
    pub pending: Vec<Option<Vec<f64>>>,
    pub therapy: TherapyParams,
    pub beta: Beta,
}

/// What one Predict/Update did.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepOutcome {
    pub td_error: Option<f64>,
    pub policy: f64,
    pub action: f64,
}

impl AgentBundle {
    /// `thetas` and `hps` are indexed like [`AgentKind::ALL`]. The critic
    /// weights of the feature coordinates start within `CRITIC_INIT_SPREAD` of
    /// `beta / (1 - gamma)`, the value of a state that repeats forever; the
    /// other weights and the trace start uniform in `[0, CRITIC_INIT_SPREAD)`.
    pub fn new(therapy: TherapyParams, thetas: Vec<Vec<f64>>, hps: Vec<Hyperparams>, beta: Beta, rng: &mut impl Rng) -> Self {
        let agents = AgentKind::ALL
            .iter()
            .zip(thetas)
            .zip(hps)
            .map(|((&kind, theta), hp)| {
                let n = kind.state_dim();
                let anchor = [beta.hyper / (1.0 - hp.gamma), beta.hypo / (1.0 - hp.gamma)];
                let w = (0..n)
                    .map(|i| {
                        let u: f64 = rng.random_range(-1.0..1.0);
                        match anchor.get(i) {
                            Some(a) => a * (1.0 + CRITIC_INIT_SPREAD * u),
                            None => CRITIC_INIT_SPREAD * 0.5 * (1.0 + u),
                        }
                    })
                    .collect();
                let z = (0..n).map(|_| rng.random::<f64>() * CRITIC_INIT_SPREAD).collect();
                AgentState::new(kind, theta, w, z, hp)
            })
            .collect();
        AgentBundle {
            agents,
            pending: vec![None; 7],
            therapy,
            beta,
        }
    }

    pub fn agent(&self, kind: AgentKind) -> &AgentState {
        &self.agents[kind.index()]
    }

    fn current(&self, kind: AgentKind) -> (f64, f64) {
        let t = &self.therapy;
        match kind {
            AgentKind::Basal => (t.basal, t.basal_init),
            AgentKind::Icr(i) => (t.icr[i], t.icr_init[i]),
            AgentKind::Ps(i) => (t.ps[i], t.ps_init[i]),
        }
    }

    fn set(&mut self, kind: AgentKind, value: f64) {
        let t = &mut self.therapy;
        match kind {
            AgentKind::Basal => t.basal = value,
            AgentKind::Icr(i) => t.icr[i] = value,
            AgentKind::Ps(i) => t.ps[i] = value,
        }
    }

    /// Update the agent with the transition into `s_next` (if an action is
    /// pending), then predict its next action from `s_next`.
    fn advance(&mut self, kind: AgentKind, s_next: Vec<f64>, f_prev: &FeatureVector, prev_tdd: Option<f64>) -> StepOutcome {
        let idx = kind.index();
        let beta = self.beta;
        let agent = &mut self.agents[idx];
        let td_error = match self.pending[idx].take() {
            Some(s_t) => {
                let d = critic_update(agent, &s_t, &s_next, &beta);
                if let Some(d) = d {
                    actor_update(agent, d, &s_t);
                }
                d
            }
            None => None,
        };
        let p = policy(agent, &s_next, f_prev);
        let smoothing = agent.hp.smoothing;
        let (current, init) = self.current(kind);
        let action = apply_action(kind, p, current, init, smoothing, prev_tdd);
        self.set(kind, action);
        self.pending[idx] = Some(s_next);
        StepOutcome { td_error, policy: p, action }
    }

    /// Close the window of meal `slot`: both its ICR and PS agent learn from
    /// `f` and set tomorrow's values. `b_k` is today's overnight delta, used by
    /// the dinner ICR.
    pub fn meal_step(&mut self, slot: usize, f: &FeatureVector, b_k: Option<[f64; 2]>) -> [StepOutcome; 2] {
        let icr = AgentKind::Icr(slot);
        let ps = AgentKind::Ps(slot);
        let s_icr = build_state(icr, f, b_k);
        let s_ps = build_state(ps, f, None);
        [self.advance(icr, s_icr, f, None), self.advance(ps, s_ps, f, None)]
    }

    /// Basal Predict/Update right before the injection.
    pub fn basal_step(&mut self, f: &FeatureVector, b_k: Option<[f64; 2]>, prev_tdd: Option<f64>) -> StepOutcome {
        let s = build_state(AgentKind::Basal, f, b_k);
        self.advance(AgentKind::Basal, s, f, prev_tdd)
    }

    /// Record `state` as the state the agent's current value was chosen from,
    /// without changing the value.
    pub fn prime(&mut self, kind: AgentKind, state: Vec<f64>) {
        assert_eq!(state.len(), kind.state_dim());
        self.pending[kind.index()] = Some(state);
    }

    /// Versioned key = value text.
    pub fn to_checkpoint(&self) -> String {
        let mut out = format!("{CHECKPOINT_TAG} v{CHECKPOINT_VERSION}\n");
        let join = |v: &[f64]| v.iter().map(|x| format!("{x}")).collect::<Vec<_>>().join(" ");
        let t = &self.therapy;
        let _ = writeln!(out, "beta = {} {}", self.beta.hyper, self.beta.hypo);
        let _ = writeln!(out, "therapy.icr = {}", join(&t.icr));
        let _ = writeln!(out, "therapy.ps = {}", join(&t.ps));
        let _ = writeln!(out, "therapy.cf = {}", t.cf);
        let _ = writeln!(out, "therapy.basal = {}", t.basal);
        let _ = writeln!(out, "therapy.icr_init = {}", join(&t.icr_init));
        let _ = writeln!(out, "therapy.ps_init = {}", join(&t.ps_init));
        let _ = writeln!(out, "therapy.basal_init = {}", t.basal_init);
        for (a, pending) in self.agents.iter().zip(&self.pending) {
            let k = a.kind.name();
            let hp = &a.hp;
            let _ = writeln!(out, "{k}.theta = {}", join(&a.theta));
            let _ = writeln!(out, "{k}.w = {}", join(&a.w));
            let _ = writeln!(out, "{k}.z = {}", join(&a.z));
            let _ = writeln!(out, "{k}.adam_m = {}", join(&a.adam_m));
            let _ = writeln!(out, "{k}.adam_v = {}", join(&a.adam_v));
            let _ = writeln!(out, "{k}.steps = {}", a.step_count);
            let _ = writeln!(
                out,
                "{k}.hp = {} {} {} {} {} {}",
                hp.lr_actor, hp.lr_critic, hp.smoothing, hp.alpha_sp, hp.gamma, hp.lambda
            );
            match pending {
                Some(s) => {
                    let _ = writeln!(out, "{k}.pending = {}", join(s));
                }
                None => {
                    let _ = writeln!(out, "{k}.pending = none");
                }
            }
        }
        out
    }

    pub fn from_checkpoint(text: &str) -> Result<Self> {
        let src = "agent checkpoint";
        let mut lines = text.lines();
        let header = lines.next().ok_or_else(|| Error::schema(src, "empty document"))?;
        if header != format!("{CHECKPOINT_TAG} v{CHECKPOINT_VERSION}") {
            return Err(Error::schema(src, format!("unsupported header {header:?}")));
        }
        let mut kv = BTreeMap::new();
        for line in lines.filter(|l| !l.trim().is_empty() && !l.starts_with('#')) {
            let (k, v) = line
                .split_once(" = ")
                .ok_or_else(|| Error::schema(src, format!("malformed line {line:?}")))?;
            kv.insert(k.to_string(), v.to_string());
        }
        let get = |k: &str| kv.get(k).ok_or_else(|| Error::schema(src, format!("missing key {k}")));
        let floats = |k: &str| -> Result<Vec<f64>> {
            get(k)?
                .split_whitespace()
                .map(|x| x.parse::<f64>().map_err(|e| Error::schema(src, format!("{k}: {e}"))))
                .collect()
        };
        let fixed = |k: &str, n: usize| -> Result<Vec<f64>> {
            let v = floats(k)?;
            if v.len() != n {
                return Err(Error::schema(src, format!("{k}: expected {n} values, got {}", v.len())));
            }
            Ok(v)
        };
        let three = |k: &str| -> Result<[f64; 3]> {
            let v = fixed(k, 3)?;
            Ok([v[0], v[1], v[2]])
        };
        let b = fixed("beta", 2)?;
        let therapy = TherapyParams {
            icr: three("therapy.icr")?,
            ps: three("therapy.ps")?,
            cf: fixed("therapy.cf", 1)?[0],
            basal: fixed("therapy.basal", 1)?[0],
            icr_init: three("therapy.icr_init")?,
            ps_init: three("therapy.ps_init")?,
            basal_init: fixed("therapy.basal_init", 1)?[0],
        };
        let mut agents = Vec::with_capacity(7);
        let mut pending = Vec::with_capacity(7);
        for kind in AgentKind::ALL {
            let k = kind.name();
            let n = kind.state_dim();
            let hp = fixed(&format!("{k}.hp"), 6)?;
            let mut a = AgentState::new(
                kind,
                fixed(&format!("{k}.theta"), n)?,
                fixed(&format!("{k}.w"), n)?,
                fixed(&format!("{k}.z"), n)?,
                Hyperparams {
                    lr_actor: hp[0],
                    lr_critic: hp[1],
                    smoothing: hp[2],
                    alpha_sp: hp[3],
                    gamma: hp[4],
                    lambda: hp[5],
                },
            );
            a.adam_m = fixed(&format!("{k}.adam_m"), n)?;
            a.adam_v = fixed(&format!("{k}.adam_v"), n)?;
            a.step_count = get(&format!("{k}.steps"))?
                .parse()
                .map_err(|e| Error::schema(src, format!("{k}.steps: {e}")))?;
            agents.push(a);
            let key = format!("{k}.pending");
            pending.push(if get(&key)? == "none" { None } else { Some(fixed(&key, n)?) });
        }
        Ok(AgentBundle {
            agents,
            pending,
            therapy,
            beta: Beta { hyper: b[0], hypo: b[1] },
        })
    }
}
