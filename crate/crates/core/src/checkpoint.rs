//! Checkpoint persistence.
//!
//! Binary layout: magic, format version, the resolved configuration text,
//! the constraint state, per-network architecture descriptors followed by
//! raw little-endian f64 parameters in declaration order, optimizer
//! moments, environment snapshots (so a resumed run continues exactly
//! where it stopped), and a trailing CRC-32 over everything before it.
//!
//! Save → load → save produces identical bytes.

use crate::approx::{Activation, Adam, MlpParams};
use crate::envkit::{EnvState, RandomizationDraw};
use crate::error::{Error, Result};
use crate::hinf::{HinfState, Trainer};
use crate::linalg::Mat;
use crate::rollout::VecEnvs;
use std::path::Path;

const MAGIC: &[u8; 8] = b"HINFCKP\0";
pub const FORMAT_VERSION: u32 = 1;

/// Everything needed to resume a run or evaluate a policy.
#[derive(Debug, Clone)]
pub struct CheckpointBundle {
    pub config_text: String,
    pub iteration: u64,
    pub eta: f64,
    pub lambda: f64,
    pub actor: MlpParams,
    pub disturber: MlpParams,
    pub critic: MlpParams,
    pub adam_actor: Adam,
    pub adam_disturber: Adam,
    pub adam_critic: Adam,
    pub envs_seed: u64,
    pub envs_randomize: bool,
    pub episode_counters: Vec<u64>,
    pub env_states: Vec<EnvState>,
}

struct Writer {
    buf: Vec<u8>,
}

impl Writer {
    fn new() -> Self {
        Writer { buf: Vec::new() }
    }

    fn u8(&mut self, v: u8) {
        self.buf.push(v);
    }

    fn u32(&mut self, v: u32) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }

    fn u64(&mut self, v: u64) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }

    fn f64(&mut self, v: f64) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }

    fn bytes(&mut self, v: &[u8]) {
        self.u32(v.len() as u32);
        self.buf.extend_from_slice(v);
    }

    fn f64_slice(&mut self, v: &[f64]) {
        self.u64(v.len() as u64);
        for x in v {
            self.f64(*x);
        }
    }
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn new(buf: &'a [u8]) -> Self {
        Reader { buf, pos: 0 }
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.pos + n > self.buf.len() {
            return Err(Error::CheckpointCorrupt(format!(
                "truncated: wanted {n} bytes at offset {}, have {}",
                self.pos,
                self.buf.len() - self.pos
            )));
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn bytes(&mut self) -> Result<Vec<u8>> {
        let n = self.u32()? as usize;
        Ok(self.take(n)?.to_vec())
    }

    fn f64_slice(&mut self) -> Result<Vec<f64>> {
        let n = self.u64()? as usize;
        if n > (1 << 28) {
            return Err(Error::CheckpointCorrupt(format!("implausible array length {n}")));
        }
        let mut out = Vec::with_capacity(n);
        for _ in 0..n {
            out.push(self.f64()?);
        }
        Ok(out)
    }
}

fn write_net(w: &mut Writer, net: &MlpParams) {
    w.u32(net.widths.len() as u32);
    for width in &net.widths {
        w.u32(*width as u32);
    }
    w.u8(match net.activation {
        Activation::Tanh => 0,
        Activation::Elu => 1,
    });
    w.u8(net.log_std.is_some() as u8);
    w.f64_slice(&net.flatten());
}

fn read_net(r: &mut Reader) -> Result<MlpParams> {
    let n_widths = r.u32()? as usize;
    if n_widths < 2 || n_widths > 64 {
        return Err(Error::CheckpointCorrupt(format!("implausible layer count {n_widths}")));
    }
    let mut widths = Vec::with_capacity(n_widths);
    for _ in 0..n_widths {
        widths.push(r.u32()? as usize);
    }
    let activation = match r.u8()? {
        0 => Activation::Tanh,
        1 => Activation::Elu,
        other => return Err(Error::CheckpointCorrupt(format!("unknown activation tag {other}"))),
    };
    let has_log_std = r.u8()? != 0;
    let flat = r.f64_slice()?;

    let layers = widths.len() - 1;
    let weights: Vec<Mat> = (0..layers).map(|l| Mat::zeros(widths[l], widths[l + 1])).collect();
    let biases: Vec<Vec<f64>> = (0..layers).map(|l| vec![0.0; widths[l + 1]]).collect();
    let log_std = if has_log_std { Some(vec![0.0; *widths.last().unwrap()]) } else { None };
    let mut net = MlpParams { widths, weights, biases, activation, log_std };
    if flat.len() != net.param_count() {
        return Err(Error::CheckpointCorrupt(format!(
            "parameter payload {} does not match architecture ({} expected)",
            flat.len(),
            net.param_count()
        )));
    }
    net.assign_from_flat(&flat);
    Ok(net)
}

fn write_adam(w: &mut Writer, adam: &Adam) {
    w.f64(adam.lr);
    w.u64(adam.t);
    w.f64_slice(&adam.m);
    w.f64_slice(&adam.v);
}

fn read_adam(r: &mut Reader) -> Result<Adam> {
    let lr = r.f64()?;
    let t = r.u64()?;
    let m = r.f64_slice()?;
    let v = r.f64_slice()?;
    if m.len() != v.len() {
        return Err(Error::CheckpointCorrupt("optimizer moment lengths differ".into()));
    }
    let mut adam = Adam::new(lr, m.len());
    adam.t = t;
    adam.m = m;
    adam.v = v;
    Ok(adam)
}

fn write_state(w: &mut Writer, s: &EnvState) {
    for v in [s.position[0], s.position[1], s.velocity[0], s.velocity[1], s.heading, s.angular_velocity] {
        w.f64(v);
    }
    for v in s.command {
        w.f64(v);
    }
    w.f64_slice(&s.last_action);
    w.f64_slice(&s.prev_action);
    w.u32(s.time_index);
    w.u64(s.discrete_index as u64);
    w.f64(s.heading_ref);
    w.u32(s.speed_err_steps);
    w.u32(s.heading_err_steps);
    w.u8(s.terminated as u8);
    for v in [s.draw.friction, s.draw.restitution, s.draw.kp_scale, s.draw.kd_scale, s.draw.init_state_scale] {
        w.f64(v);
    }
    w.u64(s.stream_seed);
}

fn read_state(r: &mut Reader) -> Result<EnvState> {
    let position = [r.f64()?, r.f64()?];
    let velocity = [r.f64()?, r.f64()?];
    let heading = r.f64()?;
    let angular_velocity = r.f64()?;
    let command = [r.f64()?, r.f64()?, r.f64()?];
    let last_action = r.f64_slice()?;
    let prev_action = r.f64_slice()?;
    let time_index = r.u32()?;
    let discrete_index = r.u64()? as usize;
    let heading_ref = r.f64()?;
    let speed_err_steps = r.u32()?;
    let heading_err_steps = r.u32()?;
    let terminated = r.u8()? != 0;
    let draw = RandomizationDraw {
        friction: r.f64()?,
        restitution: r.f64()?,
        kp_scale: r.f64()?,
        kd_scale: r.f64()?,
        init_state_scale: r.f64()?,
    };
    let stream_seed = r.u64()?;
    Ok(EnvState {
        position,
        velocity,
        heading,
        angular_velocity,
        command,
        last_action,
        prev_action,
        time_index,
        discrete_index,
        heading_ref,
        speed_err_steps,
        heading_err_steps,
        terminated,
        draw,
        stream_seed,
    })
}

pub fn encode(bundle: &CheckpointBundle) -> Vec<u8> {
    let mut w = Writer::new();
    w.buf.extend_from_slice(MAGIC);
    w.u32(FORMAT_VERSION);
    w.bytes(bundle.config_text.as_bytes());
    w.u64(bundle.iteration);
    w.f64(bundle.eta);
    w.f64(bundle.lambda);
    write_net(&mut w, &bundle.actor);
    write_net(&mut w, &bundle.disturber);
    write_net(&mut w, &bundle.critic);
    write_adam(&mut w, &bundle.adam_actor);
    write_adam(&mut w, &bundle.adam_disturber);
    write_adam(&mut w, &bundle.adam_critic);
    w.u64(bundle.envs_seed);
    w.u8(bundle.envs_randomize as u8);
    w.u32(bundle.env_states.len() as u32);
    for (state, counter) in bundle.env_states.iter().zip(&bundle.episode_counters) {
        w.u64(*counter);
        write_state(&mut w, state);
    }
    let crc = crc32fast::hash(&w.buf);
    w.u32(crc);
    w.buf
}

pub fn decode(bytes: &[u8]) -> Result<CheckpointBundle> {
    if bytes.len() < MAGIC.len() + 8 {
        return Err(Error::CheckpointCorrupt("file shorter than header".into()));
    }
    let (body, crc_bytes) = bytes.split_at(bytes.len() - 4);
    let stored_crc = u32::from_le_bytes(crc_bytes.try_into().unwrap());
    let computed = crc32fast::hash(body);
    if stored_crc != computed {
        return Err(Error::CheckpointCorrupt(format!("crc mismatch: stored {stored_crc:08x}, computed {computed:08x}")));
    }
    let mut r = Reader::new(body);
    let magic = r.take(MAGIC.len())?;
    if magic != MAGIC {
        return Err(Error::CheckpointCorrupt("bad magic".into()));
    }
    let version = r.u32()?;
    if version != FORMAT_VERSION {
        return Err(Error::CheckpointVersion { found: version, expected: FORMAT_VERSION });
    }
    let config_text = String::from_utf8(r.bytes()?)
        .map_err(|_| Error::CheckpointCorrupt("config text is not utf-8".into()))?;
    let iteration = r.u64()?;
    let eta = r.f64()?;
    let lambda = r.f64()?;
    let actor = read_net(&mut r)?;
    let disturber = read_net(&mut r)?;
    let critic = read_net(&mut r)?;
    let adam_actor = read_adam(&mut r)?;
    let adam_disturber = read_adam(&mut r)?;
    let adam_critic = read_adam(&mut r)?;
    let envs_seed = r.u64()?;
    let envs_randomize = r.u8()? != 0;
    let n_envs = r.u32()? as usize;
    if n_envs > (1 << 20) {
        return Err(Error::CheckpointCorrupt(format!("implausible env count {n_envs}")));
    }
    let mut episode_counters = Vec::with_capacity(n_envs);
    let mut env_states = Vec::with_capacity(n_envs);
    for _ in 0..n_envs {
        episode_counters.push(r.u64()?);
        env_states.push(read_state(&mut r)?);
    }
    if r.pos != body.len() {
        return Err(Error::CheckpointCorrupt(format!("{} trailing bytes", body.len() - r.pos)));
    }
    Ok(CheckpointBundle {
        config_text,
        iteration,
        eta,
        lambda,
        actor,
        disturber,
        critic,
        adam_actor,
        adam_disturber,
        adam_critic,
        envs_seed,
        envs_randomize,
        episode_counters,
        env_states,
    })
}

pub fn save<P: AsRef<Path>>(bundle: &CheckpointBundle, path: P) -> Result<()> {
    std::fs::write(path, encode(bundle))?;
    Ok(())
}

pub fn load<P: AsRef<Path>>(path: P) -> Result<CheckpointBundle> {
    let bytes = std::fs::read(path)?;
    decode(&bytes)
}

impl Trainer {
    pub fn to_bundle(&self) -> CheckpointBundle {
        CheckpointBundle {
            config_text: self.cfg.to_text(),
            iteration: self.iter,
            eta: self.h.eta,
            lambda: self.h.lambda,
            actor: self.actor.clone(),
            disturber: self.disturber.clone(),
            critic: self.critic.clone(),
            adam_actor: self.adam_actor.clone(),
            adam_disturber: self.adam_disturber.clone(),
            adam_critic: self.adam_critic.clone(),
            envs_seed: self.envs.seed(),
            envs_randomize: self.envs.randomize(),
            episode_counters: self.envs.episode_counters.clone(),
            env_states: self.envs.states.clone(),
        }
    }

    /// Rebuild a trainer from a bundle; the architecture must match the
    /// embedded configuration.
    pub fn from_bundle(bundle: CheckpointBundle) -> Result<Trainer> {
        let cfg = crate::config::RunConfig::parse(&bundle.config_text)
            .map_err(|e| Error::CheckpointMismatch(format!("embedded config does not parse: {e}")))?;
        let model = cfg.build_model()?;
        if bundle.actor.input_dim() != model.feature_dim()
            || bundle.actor.output_dim() != model.action_dim()
            || bundle.disturber.output_dim() != model.disturbance_dim()
            || bundle.critic.output_dim() != 2
        {
            return Err(Error::CheckpointMismatch(
                "network shapes do not match the environment in the embedded config".into(),
            ));
        }
        if bundle.env_states.len() != cfg.train_n_envs || bundle.episode_counters.len() != cfg.train_n_envs {
            return Err(Error::CheckpointMismatch("environment snapshot count differs from config".into()));
        }
        let mut h = HinfState::from_config(&cfg);
        h.eta = bundle.eta;
        h.lambda = bundle.lambda;
        let envs = VecEnvs::from_parts(
            model,
            bundle.env_states,
            bundle.episode_counters,
            bundle.envs_seed,
            bundle.envs_randomize,
        );
        Ok(Trainer {
            cfg,
            h,
            actor: bundle.actor,
            disturber: bundle.disturber,
            critic: bundle.critic,
            adam_actor: bundle.adam_actor,
            adam_disturber: bundle.adam_disturber,
            adam_critic: bundle.adam_critic,
            envs,
            iter: bundle.iteration,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::RunConfig;

    fn small_trainer() -> Trainer {
        let cfg = RunConfig {
            train_n_envs: 3,
            train_t_steps: 8,
            net_actor_hidden: vec![8],
            net_critic_hidden: vec![8],
            ..RunConfig::default()
        };
        Trainer::new(&cfg).unwrap()
    }

    #[test]
    fn save_load_save_bit_identical() {
        let mut trainer = small_trainer();
        trainer.train_iteration().unwrap();
        let bundle = trainer.to_bundle();
        let bytes1 = encode(&bundle);
        let decoded = decode(&bytes1).unwrap();
        let bytes2 = encode(&decoded);
        assert_eq!(bytes1, bytes2);
    }

    #[test]
    fn truncated_file_is_corruption() {
        let trainer = small_trainer();
        let bytes = encode(&trainer.to_bundle());
        for cut in [1usize, 10, bytes.len() / 2, bytes.len() - 1] {
            let r = decode(&bytes[..cut]);
            assert!(matches!(r, Err(Error::CheckpointCorrupt(_))), "cut at {cut}");
        }
    }

    #[test]
    fn bitflip_detected_by_crc() {
        let trainer = small_trainer();
        let mut bytes = encode(&trainer.to_bundle());
        let mid = bytes.len() / 2;
        bytes[mid] ^= 0x40;
        assert!(matches!(decode(&bytes), Err(Error::CheckpointCorrupt(_))));
    }

    #[test]
    fn version_mismatch_typed_error() {
        let trainer = small_trainer();
        let mut bytes = encode(&trainer.to_bundle());
        // Patch the version field (after 8 magic bytes) and redo the crc.
        bytes[8] = 99;
        let n = bytes.len();
        let crc = crc32fast::hash(&bytes[..n - 4]);
        bytes[n - 4..].copy_from_slice(&crc.to_le_bytes());
        assert!(matches!(decode(&bytes), Err(Error::CheckpointVersion { found: 99, .. })));
    }

    #[test]
    fn resume_equivalence() {
        // Train k+1 iterations straight vs save at k, reload, one more:
        // the two reports and parameter sets agree exactly.
        let mut straight = small_trainer();
        for _ in 0..3 {
            straight.train_iteration().unwrap();
        }
        let r_straight = straight.train_iteration().unwrap();

        let mut first = small_trainer();
        for _ in 0..3 {
            first.train_iteration().unwrap();
        }
        let bytes = encode(&first.to_bundle());
        let mut resumed = Trainer::from_bundle(decode(&bytes).unwrap()).unwrap();
        let r_resumed = resumed.train_iteration().unwrap();

        assert_eq!(r_straight.eta_after.to_bits(), r_resumed.eta_after.to_bits());
        assert_eq!(r_straight.sum_cost.to_bits(), r_resumed.sum_cost.to_bits());
        for (a, b) in straight.actor.flatten().iter().zip(resumed.actor.flatten().iter()) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }
}
