use std::path::PathBuf;

use clap::{Args, Subcommand, ValueEnum};
use regtrace::acceptance::DEFAULT_SEED;
use regtrace::param_trace::BracketTerm;
use serde::{Deserialize, Serialize};
use serde_json::Value;

#[derive(Subcommand, Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "kebab-case")]
pub enum Command {
    /// Partie finie of the ball integrals of a symbol.
    Pf(SymbolArgs),
    /// Residue integral of the degree −p term.
    Res(ResArgs),
    /// Change-of-variables formula under a linear map.
    CovCheck(CovArgs),
    /// Boundary defect of ∂_j under the partie finie.
    Stokes(StokesArgs),
    /// Large-λ expansion of ∫ b(ξ)(|ξ|²+λ²)^{-s} dξ.
    Expand(ExpandArgs),
    /// Heat trace of a model Laplacian.
    Heat(HeatArgs),
    /// Spectral zeta function of a model.
    Zeta(ZetaArgs),
    /// Residue trace of Δ^α by the heat and zeta routes.
    Restrace(RestraceArgs),
    /// Canonical trace of Δ^{-s} off the kernel.
    Kv(KvArgs),
    /// Dixmier averages of an eigenvalue sequence.
    Dixmier(DixmierArgs),
    /// Dixmier estimate of Δ^{-n/2} against Res/n.
    Connes(ConnesArgs),
    /// Parametric trace of a multiplier on the circle.
    ParamTr(ParamTrArgs),
    /// Thom calculus identities on the cone-form corpus.
    ThomCheck(SeedArgs),
    /// Run the acceptance criteria.
    Corpus(CorpusArgs),
}

/// A symbol recipe: a JSON file path on the command line, inlined in outputs.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Source {
    File(PathBuf),
    Inline(Value),
}

fn parse_source(s: &str) -> Result<Source, String> {
    Ok(Source::File(s.into()))
}

impl Source {
    fn resolve(self) -> Result<Source, String> {
        match self {
            Source::File(p) => {
                let text = std::fs::read_to_string(&p).map_err(|e| format!("{}: {e}", p.display()))?;
                let v = serde_json::from_str(&text).map_err(|e| format!("{}: malformed JSON: {e}", p.display()))?;
                Ok(Source::Inline(v))
            }
            inline => Ok(inline),
        }
    }

    pub fn value(&self) -> &Value {
        match self {
            Source::Inline(v) => v,
            Source::File(_) => unreachable!("sources are resolved before execution"),
        }
    }
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
pub struct SymbolArgs {
    /// JSON file with a generator recipe.
    #[arg(long, value_parser = parse_source)]
    pub symbol: Source,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Norm {
    Raw,
    TwoPiPower,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
pub struct ResArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub symbol: SymbolArgs,
    #[arg(long, value_enum, default_value_t = Norm::Raw)]
    pub normalization: Norm,
}

/// Square matrix given row by row.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Matrix(pub Vec<Vec<f64>>);

fn parse_matrix(s: &str) -> Result<Matrix, String> {
    s.split(';')
        .map(|row| row.split(',').map(|x| x.trim().parse::<f64>().map_err(|e| format!("{x:?}: {e}"))).collect())
        .collect::<Result<_, _>>()
        .map(Matrix)
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
pub struct CovArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub symbol: SymbolArgs,
    /// Matrix rows separated by ';', entries by ',' (e.g. "2,1;0,1").
    #[arg(long, value_parser = parse_matrix, allow_hyphen_values = true)]
    pub matrix: Matrix,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
pub struct StokesArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub symbol: SymbolArgs,
    #[arg(long, default_value_t = 0)]
    pub axis: usize,
    /// Also compute the defect by direct integration over spheres.
    #[arg(long)]
    pub brute_force: bool,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
pub struct ExpandArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub symbol: SymbolArgs,
    /// Exponent s of the kernel (|ξ|²+λ²)^{-s}.
    #[arg(long, default_value_t = 1.0)]
    pub s: f64,
    /// Number of Taylor orders of the kernel (default from the symbol).
    #[arg(long)]
    pub depth: Option<usize>,
    /// Fit the leading coefficients to sampled values on [lambda-min, lambda-max].
    #[arg(long)]
    pub fit: bool,
    #[arg(long, default_value_t = 1e2)]
    pub lambda_min: f64,
    #[arg(long, default_value_t = 1e4)]
    pub lambda_max: f64,
    /// Sample count for the fit and the plot series.
    #[arg(long, default_value_t = 24)]
    pub points: usize,
}

/// `circle`, `circle:R`, `torus2`, `torus3`, or `torus:L1,L2,...`.
#[derive(Args, Debug, Clone, Serialize, Deserialize)]
pub struct ModelArgs {
    #[arg(long, default_value = "circle")]
    pub model: String,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
pub struct HeatArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub model: ModelArgs,
    #[arg(long, default_value_t = 1e-2)]
    pub t: f64,
    /// With --points, a log-spaced series on [t, t-max].
    #[arg(long)]
    pub t_max: Option<f64>,
    #[arg(long, default_value_t = 50)]
    pub points: usize,
    /// Heat coefficients a_0 .. a_jmax.
    #[arg(long, default_value_t = 4)]
    pub jmax: usize,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
pub struct ZetaArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub model: ModelArgs,
    #[arg(long, allow_hyphen_values = true)]
    pub s: f64,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
pub struct RestraceArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub model: ModelArgs,
    /// Power α of Δ^α; default −n/2.
    #[arg(long, allow_hyphen_values = true)]
    pub alpha: Option<f64>,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
pub struct KvArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub model: ModelArgs,
    #[arg(long, allow_hyphen_values = true)]
    pub s: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SequenceKind {
    /// μ_j = scale / j.
    Harmonic,
    /// μ_j = j^{-p}.
    Power,
    /// Constants 1 and 2 alternating on dyadic blocks.
    Dyadic,
    /// Δ^{-n/2} of --model.
    Model,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
pub struct DixmierArgs {
    #[arg(long, value_enum, default_value_t = SequenceKind::Harmonic)]
    pub sequence: SequenceKind,
    #[arg(long, default_value_t = 1.0)]
    pub scale: f64,
    #[arg(long, default_value_t = 2.0)]
    pub p: f64,
    #[command(flatten)]
    #[serde(flatten)]
    pub model: ModelArgs,
    /// Sequence length N (at most 10^7).
    #[arg(long, default_value_t = 1 << 20)]
    pub length: usize,
    /// Also report F(λ)/λ and the zeta limit at this λ.
    #[arg(long)]
    pub ikehara: Option<f64>,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
pub struct ConnesArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub model: ModelArgs,
    #[arg(long, default_value_t = 1 << 23)]
    pub length: usize,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
pub struct ParamTrArgs {
    /// A named multiplier (see --list-families).
    #[arg(long, conflicts_with = "multiplier")]
    pub family: Option<String>,
    /// JSON file with a list of bracket terms {coeff, mu_power, s, kappa}.
    #[arg(long, value_parser = parse_multiplier)]
    pub multiplier: Option<MultiplierSource>,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub mu: f64,
    /// Derivative order in μ.
    #[arg(long, default_value_t = 0)]
    pub derivative: usize,
    /// Also compute the regularized trace, the derived trace and res.
    #[arg(long)]
    pub regularized: bool,
    /// With --points, a series of TR on [mu, mu-max].
    #[arg(long, allow_hyphen_values = true)]
    pub mu_max: Option<f64>,
    #[arg(long, default_value_t = 50)]
    pub points: usize,
    #[arg(long)]
    #[serde(skip)]
    pub list_families: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MultiplierSource {
    File(PathBuf),
    Terms(Vec<BracketTerm>),
}

fn parse_multiplier(s: &str) -> Result<MultiplierSource, String> {
    Ok(MultiplierSource::File(s.into()))
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
pub struct SeedArgs {
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    /// Sample points per corpus form.
    #[arg(long, default_value_t = 50)]
    pub samples: usize,
    #[arg(long, default_value_t = 1e-8)]
    pub tol: f64,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
pub struct CorpusArgs {
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    /// Run only these criteria (default: all ten).
    #[arg(long, value_delimiter = ',')]
    #[serde(default)]
    pub only: Vec<usize>,
}

impl Command {
    /// Replaces file references by their contents so outputs replay on their own.
    pub fn resolve(self) -> Result<Command, String> {
        let sym = |s: SymbolArgs| -> Result<SymbolArgs, String> { Ok(SymbolArgs { symbol: s.symbol.resolve()? }) };
        Ok(match self {
            Command::Pf(s) => Command::Pf(sym(s)?),
            Command::Res(a) => Command::Res(ResArgs { symbol: sym(a.symbol)?, ..a }),
            Command::CovCheck(a) => Command::CovCheck(CovArgs { symbol: sym(a.symbol)?, ..a }),
            Command::Stokes(a) => Command::Stokes(StokesArgs { symbol: sym(a.symbol)?, ..a }),
            Command::Expand(a) => Command::Expand(ExpandArgs { symbol: sym(a.symbol)?, ..a }),
            Command::ParamTr(mut a) => {
                if let Some(MultiplierSource::File(p)) = &a.multiplier {
                    let text = std::fs::read_to_string(p).map_err(|e| format!("{}: {e}", p.display()))?;
                    let terms = serde_json::from_str(&text)
                        .map_err(|e| format!("{}: malformed multiplier: {e}", p.display()))?;
                    a.multiplier = Some(MultiplierSource::Terms(terms));
                }
                Command::ParamTr(a)
            }
            other => other,
        })
    }
}
