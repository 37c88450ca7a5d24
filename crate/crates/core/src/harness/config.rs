use std::path::{Path, PathBuf};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::{KernelSpec, RationalAnticausalKernel};
use crate::predictor::{TargetClass, TimeGrid};
use crate::signals::{
    make_bandlimited_signal, make_highfreq_signal, make_mixed_signal, spectrum_grid, Atom, Density, EnvelopeShape,
    EnvelopeSpec, MixedSpectrum, SampledSpectrum,
};

/// Signals named in a config. Random entries expand into `count` signals
/// drawn from the config seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum SignalSpec {
    Bandlimited {
        id: String,
        envelope: EnvelopeSpec,
    },
    Highfreq {
        id: String,
        envelope: EnvelopeSpec,
    },
    /// Sum of envelopes with no class constraint.
    Composite {
        id: String,
        parts: Vec<EnvelopeSpec>,
    },
    Zero {
        id: String,
    },
    /// Seeded bump mixtures in the config's domain.
    Random {
        id: String,
        count: usize,
        #[serde(default = "default_bumps")]
        bumps: usize,
    },
    /// Atoms `[omega, re, im]` plus a density, in the config's domain.
    Mixed {
        id: String,
        #[serde(default)]
        atoms: Vec<[f64; 3]>,
        #[serde(default = "no_density")]
        density: Density,
    },
    RandomMixed {
        id: String,
        count: usize,
        #[serde(default = "default_atoms")]
        atoms: usize,
        #[serde(default)]
        density: bool,
    },
}

fn default_bumps() -> usize {
    4
}

fn default_atoms() -> usize {
    3
}

fn no_density() -> Density {
    Density::None
}

/// Grid overrides; unset fields follow the defaults of [`ExperimentConfig::time_grid`].
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct GridOverrides {
    #[serde(default)]
    pub dt: Option<f64>,
    #[serde(default)]
    pub span: Option<f64>,
    #[serde(default)]
    pub len: Option<usize>,
    /// Evaluation times for mixed signals.
    #[serde(default)]
    pub times: Option<TimeGrid>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct OutputPaths {
    #[serde(default)]
    pub csv: Option<PathBuf>,
    #[serde(default)]
    pub report: Option<PathBuf>,
    #[serde(default)]
    pub svg: Option<PathBuf>,
}

/// Out-of-band perturbation: energy fraction `eta` on `±[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    pub eta: f64,
    pub lo: f64,
    pub hi: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub kernel: KernelSpec,
    pub gamma_ladder: Vec<f64>,
    #[serde(default)]
    pub signals: Vec<SignalSpec>,
    /// Gap from the band edge; defaults to `0.1 Ω`.
    #[serde(default)]
    pub epsilon: Option<f64>,
    pub domain: TargetClass,
    #[serde(default)]
    pub grid: GridOverrides,
    #[serde(default)]
    pub output: OutputPaths,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub noise: Option<NoiseSpec>,
}

/// A signal ready for the pipelines.
#[derive(Debug, Clone, PartialEq)]
pub enum ResolvedSignal {
    Sampled { id: String, spectrum: SampledSpectrum },
    Mixed { id: String, spectrum: MixedSpectrum },
}

impl ResolvedSignal {
    pub fn id(&self) -> &str {
        match self {
            ResolvedSignal::Sampled { id, .. } | ResolvedSignal::Mixed { id, .. } => id,
        }
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn omega(&self) -> f64 {
        self.kernel.omega
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon.unwrap_or(0.1 * self.omega())
    }

    /// Checks everything that can be checked without running an experiment.
    pub fn validate(&self) -> Result<RationalAnticausalKernel> {
        let kernel = self.kernel.build()?;
        if self.gamma_ladder.is_empty() {
            return Err(Error::InvalidInput("gamma_ladder is empty".into()));
        }
        for (i, g) in self.gamma_ladder.iter().enumerate() {
            if !g.is_finite() || *g == 0.0 {
                return Err(Error::InvalidInput(format!("gamma_ladder[{i}] = {g} must be finite and nonzero")));
            }
            let expected = match self.domain {
                TargetClass::Low => *g > 0.0,
                TargetClass::High => *g < 0.0,
            };
            if !expected {
                return Err(Error::InvalidInput(format!(
                    "gamma_ladder[{i}] = {g} has the wrong sign for domain {:?}",
                    self.domain
                )));
            }
            if i > 0 && g.abs() <= self.gamma_ladder[i - 1].abs() {
                return Err(Error::InvalidInput("gamma_ladder must be strictly increasing in |gamma|".into()));
            }
        }
        let eps = self.epsilon();
        if !(eps > 0.0 && eps < self.omega()) {
            return Err(Error::InvalidInput(format!("epsilon = {eps} must lie in (0, omega)")));
        }
        if let Some(n) = &self.noise {
            if !(n.eta >= 0.0 && n.lo > self.omega() && n.hi > n.lo) {
                return Err(Error::InvalidInput(format!(
                    "noise needs eta >= 0 and omega < lo < hi, got {n:?}"
                )));
            }
        }
        let mut ids = std::collections::BTreeSet::new();
        for s in &self.signals {
            let id = match s {
                SignalSpec::Bandlimited { id, .. }
                | SignalSpec::Highfreq { id, .. }
                | SignalSpec::Composite { id, .. }
                | SignalSpec::Zero { id }
                | SignalSpec::Random { id, .. }
                | SignalSpec::Mixed { id, .. }
                | SignalSpec::RandomMixed { id, .. } => id,
            };
            if !ids.insert(id.clone()) {
                return Err(Error::InvalidInput(format!("duplicate signal id {id:?}")));
            }
        }
        Ok(kernel)
    }

    /// Highest frequency the sampled signals (and noise) reach.
    fn max_frequency(&self) -> f64 {
        let omega = self.omega();
        let mut top = omega;
        for s in &self.signals {
            let edge = match s {
                SignalSpec::Bandlimited { envelope, .. } | SignalSpec::Highfreq { envelope, .. } => {
                    envelope.lo.abs().max(envelope.hi.abs())
                }
                SignalSpec::Composite { parts, .. } => {
                    parts.iter().map(|e| e.lo.abs().max(e.hi.abs())).fold(0.0, f64::max)
                }
                SignalSpec::Random { .. } => random_support(self.domain, omega).1,
                _ => 0.0,
            };
            top = top.max(edge);
        }
        if let Some(n) = &self.noise {
            top = top.max(n.hi);
        }
        top
    }

    /// Sampling grid: `dt = π / (8 ω_max)` and span `400 / min a_m` unless
    /// overridden; the length is rounded up to a power of two.
    pub fn time_grid(&self, kernel: &RationalAnticausalKernel) -> Result<TimeGrid> {
        let g = &self.grid;
        let dt = g.dt.unwrap_or(std::f64::consts::PI / (8.0 * self.max_frequency()));
        let len = match (g.len, g.span) {
            (Some(len), _) => len,
            (None, span) => {
                let span = span.unwrap_or(400.0 / kernel.min_decay_rate());
                ((span / dt).ceil() as usize).next_power_of_two()
            }
        };
        let grid = TimeGrid::centered(dt * len as f64, len);
        grid.validate()?;
        Ok(grid)
    }

    /// Times for mixed-signal evaluation; `[-20, 20]` in steps of `1/4` by default.
    pub fn mixed_times(&self) -> TimeGrid {
        self.grid.times.unwrap_or(TimeGrid {
            t0: -20.0,
            dt: 0.25,
            len: 161,
        })
    }

    /// Builds every signal, expanding random entries deterministically.
    pub fn resolve_signals(&self, grid: &TimeGrid) -> Result<Vec<ResolvedSignal>> {
        let omega = self.omega();
        let eps = self.epsilon();
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let mut out = Vec::new();
        for s in &self.signals {
            match s {
                SignalSpec::Bandlimited { id, envelope } => out.push(ResolvedSignal::Sampled {
                    id: id.clone(),
                    spectrum: make_bandlimited_signal(envelope, omega, grid)?.1,
                }),
                SignalSpec::Highfreq { id, envelope } => out.push(ResolvedSignal::Sampled {
                    id: id.clone(),
                    spectrum: make_highfreq_signal(envelope, omega, grid)?.1,
                }),
                SignalSpec::Composite { id, parts } => {
                    let mut spectrum = spectrum_grid(grid);
                    let top = spectrum.frequency(spectrum.len() - 1);
                    for part in parts {
                        for (lo, hi) in part.support() {
                            if lo < spectrum.omega0 || hi > top {
                                return Err(Error::SupportViolation(format!(
                                    "signal {id}: support [{lo}, {hi}] exceeds the grid"
                                )));
                            }
                        }
                        let vals = part.sample(spectrum.frequencies());
                        for (a, b) in spectrum.values.iter_mut().zip(vals) {
                            *a += b;
                        }
                    }
                    out.push(ResolvedSignal::Sampled { id: id.clone(), spectrum });
                }
                SignalSpec::Zero { id } => out.push(ResolvedSignal::Sampled {
                    id: id.clone(),
                    spectrum: spectrum_grid(grid),
                }),
                SignalSpec::Random { id, count, bumps } => {
                    let (lo, hi) = random_support(self.domain, omega);
                    for k in 0..*count {
                        let shape = EnvelopeShape::BumpMixture {
                            count: *bumps,
                            seed: rng.random(),
                        };
                        let (_, spectrum) = match self.domain {
                            TargetClass::Low => make_bandlimited_signal(&EnvelopeSpec::new(shape, lo, hi), omega, grid)?,
                            TargetClass::High => {
                                make_highfreq_signal(&EnvelopeSpec::new(shape, lo, hi).hermitian(), omega, grid)?
                            }
                        };
                        out.push(ResolvedSignal::Sampled {
                            id: format!("{id}-{k}"),
                            spectrum,
                        });
                    }
                }
                SignalSpec::Mixed { id, atoms, density } => {
                    let atoms: Vec<Atom> = atoms
                        .iter()
                        .map(|[w, re, im]| Atom {
                            omega: *w,
                            c: Complex64::new(*re, *im),
                        })
                        .collect();
                    out.push(ResolvedSignal::Mixed {
                        id: id.clone(),
                        spectrum: make_mixed_signal(&atoms, density.clone(), self.domain, eps, omega)?,
                    });
                }
                SignalSpec::RandomMixed { id, count, atoms, density } => {
                    for k in 0..*count {
                        out.push(ResolvedSignal::Mixed {
                            id: format!("{id}-{k}"),
                            spectrum: random_mixed(&mut rng, self.domain, eps, omega, *atoms, *density)?,
                        });
                    }
                }
            }
        }
        Ok(out)
    }
}

/// One-sided support used for random sampled signals.
fn random_support(domain: TargetClass, omega: f64) -> (f64, f64) {
    match domain {
        TargetClass::Low => (-omega, omega),
        TargetClass::High => (omega, 3.0 * omega),
    }
}

fn random_mixed(
    rng: &mut ChaCha8Rng,
    class: TargetClass,
    eps: f64,
    omega: f64,
    atoms: usize,
    density: bool,
) -> Result<MixedSpectrum> {
    let inner = omega - eps;
    let outer = omega + eps;
    let draw_freq = |rng: &mut ChaCha8Rng| match class {
        TargetClass::Low => inner * (2.0 * rng.random::<f64>() - 1.0),
        TargetClass::High => {
            let w = outer + 3.0 * omega * rng.random::<f64>();
            if rng.random::<bool>() {
                w
            } else {
                -w
            }
        }
    };
    let list: Vec<Atom> = (0..atoms)
        .map(|_| {
            let w = draw_freq(rng);
            let c = Complex64::from_polar(
                std::f64::consts::TAU * (0.5 + 1.5 * rng.random::<f64>()),
                std::f64::consts::TAU * rng.random::<f64>(),
            );
            Atom { omega: w, c }
        })
        .collect();
    let density = if density {
        let mass = 0.5 + 2.0 * rng.random::<f64>();
        match class {
            TargetClass::Low => {
                let half = inner * (0.2 + 0.8 * rng.random::<f64>());
                let center = (inner - half) * (2.0 * rng.random::<f64>() - 1.0);
                Density::RaisedCosine {
                    lo: center - half,
                    hi: center + half,
                    mass,
                    hermitian: false,
                }
            }
            TargetClass::High => {
                let lo = outer + omega * rng.random::<f64>();
                Density::RaisedCosine {
                    lo,
                    hi: lo + omega * (0.2 + rng.random::<f64>()),
                    mass,
                    hermitian: true,
                }
            }
        }
    } else {
        Density::None
    };
    make_mixed_signal(&list, density, class, eps, omega)
}
