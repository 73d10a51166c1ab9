use rand::Rng;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

use super::mlp::{softmax, Activation, MlpParams, StackGrad};

/// Layer widths of the encoder and both projector heads.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Architecture {
    pub input_dim: usize,
    pub hidden: usize,
    /// Number of relu layers in the encoder.
    pub encoder_depth: usize,
    /// Instance representation width.
    pub d1: usize,
    /// Cluster count.
    pub d2: usize,
}

impl Architecture {
    /// Encoder `input → hidden → hidden` (relu), projectors
    /// `hidden → hidden → d1` and `hidden → hidden → d2`.
    pub fn desk(input_dim: usize, d1: usize, d2: usize) -> Self {
        Self {
            input_dim,
            hidden: 64,
            encoder_depth: 2,
            d1,
            d2,
        }
    }
}

/// Encoder `f`, instance projector `g_i`, cluster projector `g_c`.
///
/// The cluster head's logits pass through a row softmax, so cluster
/// representations are nonnegative soft assignments.
#[derive(Debug, Clone, PartialEq)]
pub struct Network<T> {
    pub f: MlpParams<T>,
    pub g_i: MlpParams<T>,
    pub g_c: MlpParams<T>,
}

impl<T: Scalar> Network<T> {
    pub fn new(f: MlpParams<T>, g_i: MlpParams<T>, g_c: MlpParams<T>) -> Result<Self> {
        if f.output_dim() != g_i.input_dim() || f.output_dim() != g_c.input_dim() {
            return Err(Error::ShapeMismatch(format!(
                "encoder emits {} features but projectors take {} and {}",
                f.output_dim(),
                g_i.input_dim(),
                g_c.input_dim()
            )));
        }
        for head in [&g_i, &g_c] {
            if head.layers().last().map(|l| l.activation()) != Some(Activation::Identity) {
                return Err(Error::ShapeMismatch("projector must end in an identity layer".into()));
            }
        }
        Ok(Self { f, g_i, g_c })
    }

    pub fn random<R: Rng + ?Sized>(arch: &Architecture, rng: &mut R) -> Result<Self> {
        let mut enc = vec![arch.input_dim];
        enc.extend(std::iter::repeat_n(arch.hidden, arch.encoder_depth.max(1)));
        let f = MlpParams::random(&enc, Activation::Relu, rng)?;
        let g_i = MlpParams::random(&[arch.hidden, arch.hidden, arch.d1], Activation::Identity, rng)?;
        let g_c = Self::random_cluster_head(arch, rng)?;
        Self::new(f, g_i, g_c)
    }

    pub fn random_cluster_head<R: Rng + ?Sized>(arch: &Architecture, rng: &mut R) -> Result<MlpParams<T>> {
        MlpParams::random(&[arch.hidden, arch.hidden, arch.d2], Activation::Identity, rng)
    }

    pub fn input_dim(&self) -> usize {
        self.f.input_dim()
    }

    pub fn d1(&self) -> usize {
        self.g_i.output_dim()
    }

    pub fn d2(&self) -> usize {
        self.g_c.output_dim()
    }

    /// Sum of the three stack versions; changes whenever any parameter does.
    pub fn version(&self) -> u64 {
        self.f.version() + self.g_i.version() + self.g_c.version()
    }

    /// `h = f(x)`
    pub fn embed(&self, x: &[T]) -> Result<Vec<T>> {
        self.f.forward(x)
    }

    /// `z = g_i(h)`
    pub fn instance_rep(&self, h: &[T]) -> Result<Vec<T>> {
        self.g_i.forward(h)
    }

    /// `y = softmax(g_c(h))`
    pub fn cluster_rep(&self, h: &[T]) -> Result<Vec<T>> {
        Ok(softmax(&self.g_c.forward(h)?))
    }

    pub fn stacks(&self) -> [&MlpParams<T>; 3] {
        [&self.f, &self.g_i, &self.g_c]
    }
}

/// Gradient with respect to every parameter of a [`Network`].
#[derive(Debug, Clone, PartialEq)]
pub struct ParamGrad<T> {
    pub f: StackGrad<T>,
    pub g_i: StackGrad<T>,
    pub g_c: StackGrad<T>,
}

impl<T: Scalar> ParamGrad<T> {
    pub fn zeros_like(net: &Network<T>) -> Self {
        Self {
            f: StackGrad::zeros_like(&net.f),
            g_i: StackGrad::zeros_like(&net.g_i),
            g_c: StackGrad::zeros_like(&net.g_c),
        }
    }

    /// Encoder, instance head, cluster head, each weights-then-bias.
    pub fn flat(&self) -> Vec<T> {
        let mut out = self.f.flat();
        out.extend(self.g_i.flat());
        out.extend(self.g_c.flat());
        out
    }

    pub fn is_zero(&self) -> bool {
        self.f.is_zero() && self.g_i.is_zero() && self.g_c.is_zero()
    }
}

/// EMA decay rate, strictly inside `(0, 1)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EmaMomentum<T>(T);

impl<T: Scalar> EmaMomentum<T> {
    pub fn new(m: T) -> Result<Self> {
        if m > T::zero() && m < T::one() {
            Ok(Self(m))
        } else {
            Err(Error::InvalidParameter {
                name: "momentum",
                reason: format!("must lie in (0, 1), got {m}"),
            })
        }
    }

    pub fn value(self) -> T {
        self.0
    }
}

/// Online network trained by gradient descent, target network tracking it
/// by exponential moving average.
#[derive(Debug, Clone, PartialEq)]
pub struct MccModel<T> {
    pub online: Network<T>,
    pub target: Network<T>,
}

impl<T: Scalar> MccModel<T> {
    /// Target starts as an exact copy of the online network.
    pub fn from_online(online: Network<T>) -> Self {
        Self {
            target: online.clone(),
            online,
        }
    }

    pub fn random<R: Rng + ?Sized>(arch: &Architecture, rng: &mut R) -> Result<Self> {
        Ok(Self::from_online(Network::random(arch, rng)?))
    }

    pub fn d1(&self) -> usize {
        self.online.d1()
    }

    pub fn d2(&self) -> usize {
        self.online.d2()
    }

    pub fn online_version(&self) -> u64 {
        self.online.version()
    }
}

fn ema_stack<T: Scalar>(target: &mut MlpParams<T>, online: &MlpParams<T>, m: T) {
    let step = T::one() - m;
    for (t, &o) in target.params_mut().zip(online.params()) {
        // m·t + (1−m)·o, written so that t == o is an exact fixed point
        *t = *t + step * (o - *t);
    }
}

/// `p_T ← m·p_T + (1−m)·p_O` for every parameter of every target stack.
pub fn ema_update<T: Scalar>(model: &mut MccModel<T>, m: EmaMomentum<T>) {
    let m = m.value();
    ema_stack(&mut model.target.f, &model.online.f, m);
    ema_stack(&mut model.target.g_i, &model.online.g_i, m);
    ema_stack(&mut model.target.g_c, &model.online.g_c, m);
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::mlp::Layer;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn constant_net(value: f64) -> Network<f64> {
        let lin = |i: usize, o: usize, act| {
            Layer::new(i, o, vec![value; i * o], vec![value; o], act).unwrap()
        };
        Network::new(
            MlpParams::new(vec![lin(2, 3, Activation::Relu)]).unwrap(),
            MlpParams::new(vec![lin(3, 2, Activation::Identity)]).unwrap(),
            MlpParams::new(vec![lin(3, 2, Activation::Identity)]).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn ema_single_step_at_momentum_099() {
        let mut model = MccModel {
            online: constant_net(0.0),
            target: constant_net(1.0),
        };
        ema_update(&mut model, EmaMomentum::new(0.99).unwrap());
        for s in model.target.stacks() {
            assert!(s.params().all(|&p| (p - 0.99).abs() < 1e-15));
        }
        assert!(model.online.f.params().all(|&p| p == 0.0));
    }

    #[test]
    fn ema_fixed_point_is_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mut model = MccModel::<f64>::random(&Architecture::desk(2, 4, 3), &mut rng).unwrap();
        let before = model.target.clone();
        for _ in 0..10 {
            ema_update(&mut model, EmaMomentum::new(0.99).unwrap());
        }
        for (a, b) in model.target.stacks().iter().zip(before.stacks()) {
            assert_eq!(a.flat(), b.flat());
        }
    }

    #[test]
    fn ema_gap_decays_geometrically() {
        let mut model = MccModel {
            online: constant_net(0.0),
            target: constant_net(1.0),
        };
        for k in 1..=20 {
            ema_update(&mut model, EmaMomentum::new(0.5).unwrap());
            let want = 0.5f64.powi(k);
            assert!(model.target.g_c.params().all(|&p| p == want));
        }
    }

    #[test]
    fn ema_bumps_target_version_only() {
        let mut model = MccModel {
            online: constant_net(0.0),
            target: constant_net(1.0),
        };
        let (vo, vt) = (model.online.version(), model.target.version());
        ema_update(&mut model, EmaMomentum::new(0.9).unwrap());
        assert_eq!(model.online.version(), vo);
        assert!(model.target.version() > vt);
    }

    #[test]
    fn momentum_must_be_open_unit_interval() {
        assert!(EmaMomentum::new(0.0).is_err());
        assert!(EmaMomentum::new(1.0).is_err());
        assert!(EmaMomentum::new(0.99).is_ok());
    }

    #[test]
    fn projector_must_end_in_identity() {
        let relu = |i: usize, o: usize| Layer::new(i, o, vec![0.1; i * o], vec![0.0; o], Activation::Relu).unwrap();
        let r = Network::<f64>::new(
            MlpParams::new(vec![relu(2, 3)]).unwrap(),
            MlpParams::new(vec![relu(3, 2)]).unwrap(),
            MlpParams::new(vec![relu(3, 2)]).unwrap(),
        );
        assert!(r.is_err());
    }
}
