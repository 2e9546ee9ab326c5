//! Homogeneous network model: elements sharing one list of bounded
//! parameters, the weighted correlation graph over them, and the additive
//! quality contract used to recombine subnet scores.

use std::fmt::Write as _;
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A regulated parameter shared by every element of a network.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParameterSpec {
    pub name: String,
    pub min: f64,
    pub max: f64,
}

impl ParameterSpec {
    pub fn new(name: impl Into<String>, min: f64, max: f64) -> Self {
        Self {
            name: name.into(),
            min,
            max,
        }
    }

    #[inline]
    pub fn range(&self) -> f64 {
        self.max - self.min
    }

    #[inline]
    pub fn clamp(&self, value: f64) -> f64 {
        value.clamp(self.min, self.max)
    }

    #[inline]
    pub fn contains(&self, value: f64) -> bool {
        value >= self.min && value <= self.max
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Element {
    pub id: usize,
    /// Position in meters.
    pub position: (f64, f64),
    pub params: Vec<f64>,
}

impl Element {
    pub fn distance_m(&self, other: &Element) -> f64 {
        let dx = self.position.0 - other.position.0;
        let dy = self.position.1 - other.position.1;
        dx.hypot(dy)
    }
}

/// The optimized object. Construction validates homogeneity and bounds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Network {
    specs: Vec<ParameterSpec>,
    elements: Vec<Element>,
}

impl Network {
    pub fn new(specs: Vec<ParameterSpec>, elements: Vec<Element>) -> Result<Self> {
        let net = Self { specs, elements };
        net.validate()?;
        Ok(net)
    }

    /// Checks every structural invariant: valid specs, dense ids, aligned
    /// parameter vectors and in-bounds values.
    pub fn validate(&self) -> Result<()> {
        if self.specs.is_empty() {
            return Err(Error::InvalidNetwork("no parameter specs".into()));
        }
        for spec in &self.specs {
            if !(spec.min.is_finite() && spec.max.is_finite() && spec.min < spec.max) {
                return Err(Error::InvalidNetwork(format!(
                    "parameter `{}` has invalid bounds [{}, {}]",
                    spec.name, spec.min, spec.max
                )));
            }
        }
        if self.elements.is_empty() {
            return Err(Error::InvalidNetwork("no elements".into()));
        }
        for (index, element) in self.elements.iter().enumerate() {
            if element.id != index {
                return Err(Error::InvalidNetwork(format!(
                    "element at position {index} has id {}",
                    element.id
                )));
            }
            if !(element.position.0.is_finite() && element.position.1.is_finite()) {
                return Err(Error::InvalidNetwork(format!(
                    "element {index} has a non-finite position"
                )));
            }
            if element.params.len() != self.specs.len() {
                return Err(Error::InvalidNetwork(format!(
                    "element {index} has {} parameters, expected {}",
                    element.params.len(),
                    self.specs.len()
                )));
            }
            for (value, spec) in element.params.iter().zip(&self.specs) {
                if !spec.contains(*value) {
                    return Err(Error::InvalidNetwork(format!(
                        "element {index} parameter `{}` = {value} outside [{}, {}]",
                        spec.name, spec.min, spec.max
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn specs(&self) -> &[ParameterSpec] {
        &self.specs
    }

    pub fn elements(&self) -> &[Element] {
        &self.elements
    }

    pub fn element(&self, id: usize) -> &Element {
        &self.elements[id]
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn params_per_element(&self) -> usize {
        self.specs.len()
    }

    pub fn parameter_count(&self) -> usize {
        self.specs.len() * self.elements.len()
    }

    /// Overwrites the parameters of `id`, clamping each value to its bounds.
    pub fn set_params(&mut self, id: usize, values: &[f64]) {
        let element = &mut self.elements[id];
        for ((slot, value), spec) in element.params.iter_mut().zip(values).zip(&self.specs) {
            *slot = spec.clamp(*value);
        }
    }

    /// Writes the canonical text form. Reals use 17 significant digits so
    /// reading the file back reproduces every value bit for bit.
    pub fn write_text<W: Write>(&self, mut out: W) -> Result<()> {
        out.write_all(self.to_text().as_bytes())?;
        Ok(())
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        s.push_str("# altdecomp network v1\n");
        for spec in &self.specs {
            let _ = writeln!(s, "# param {} {:.16e} {:.16e}", spec.name, spec.min, spec.max);
        }
        s.push_str("id,x_m,y_m");
        for spec in &self.specs {
            s.push(',');
            s.push_str(&spec.name);
        }
        s.push('\n');
        for e in &self.elements {
            let _ = write!(s, "{},{:.16e},{:.16e}", e.id, e.position.0, e.position.1);
            for v in &e.params {
                let _ = write!(s, ",{v:.16e}");
            }
            s.push('\n');
        }
        s
    }

    pub fn read_text<R: BufRead>(input: R) -> Result<Self> {
        let mut specs = Vec::new();
        let mut elements = Vec::new();
        let mut header_seen = false;
        for (index, line) in input.lines().enumerate() {
            let line_no = index + 1;
            let line = line?;
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let parse_err = |reason: String| Error::Parse {
                line: line_no,
                reason,
            };
            if let Some(rest) = line.strip_prefix('#') {
                let mut parts = rest.split_whitespace();
                if parts.next() == Some("param") {
                    let (Some(name), Some(min), Some(max), None) =
                        (parts.next(), parts.next(), parts.next(), parts.next())
                    else {
                        return Err(parse_err("expected `# param <name> <min> <max>`".into()));
                    };
                    specs.push(ParameterSpec::new(
                        name,
                        parse_f64(min).map_err(parse_err)?,
                        parse_f64(max).map_err(parse_err)?,
                    ));
                }
                continue;
            }
            if !header_seen {
                let columns: Vec<&str> = line.split(',').collect();
                let expected: Vec<&str> = ["id", "x_m", "y_m"]
                    .into_iter()
                    .chain(specs.iter().map(|s| s.name.as_str()))
                    .collect();
                if columns != expected {
                    return Err(parse_err(format!(
                        "header {columns:?} does not match parameters {expected:?}"
                    )));
                }
                header_seen = true;
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != 3 + specs.len() {
                return Err(parse_err(format!(
                    "expected {} fields, found {}",
                    3 + specs.len(),
                    fields.len()
                )));
            }
            let id = fields[0]
                .parse::<usize>()
                .map_err(|e| parse_err(format!("bad id `{}`: {e}", fields[0])))?;
            let x = parse_f64(fields[1]).map_err(parse_err)?;
            let y = parse_f64(fields[2]).map_err(parse_err)?;
            let params = fields[3..]
                .iter()
                .map(|f| parse_f64(f))
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(parse_err)?;
            elements.push(Element {
                id,
                position: (x, y),
                params,
            });
        }
        if !header_seen {
            return Err(Error::Parse {
                line: 0,
                reason: "missing column header".into(),
            });
        }
        Network::new(specs, elements)
    }
}

fn parse_f64(s: &str) -> std::result::Result<f64, String> {
    s.trim()
        .parse::<f64>()
        .map_err(|e| format!("bad number `{s}`: {e}"))
}

/// Symmetric, non-negative interaction strengths between elements, stored
/// densely with a zero diagonal. An edge exists where the weight is positive.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationGraph {
    n: usize,
    weights: Vec<f64>,
}

impl CorrelationGraph {
    /// An edgeless graph over `n` vertices.
    pub fn empty(n: usize) -> Self {
        Self {
            n,
            weights: vec![0.0; n * n],
        }
    }

    /// Builds a graph from an explicit edge list. Later duplicates overwrite.
    pub fn from_edges(n: usize, edges: &[(usize, usize, f64)]) -> Result<Self> {
        let mut g = Self::empty(n);
        for &(a, b, w) in edges {
            if a >= n || b >= n || a == b {
                return Err(Error::invalid("edges", format!("bad edge ({a}, {b})")));
            }
            if !(w.is_finite() && w >= 0.0) {
                return Err(Error::InvalidCorrelation { a, b, value: w });
            }
            g.set(a, b, w);
        }
        Ok(g)
    }

    pub(crate) fn set(&mut self, a: usize, b: usize, w: f64) {
        self.weights[a * self.n + b] = w;
        self.weights[b * self.n + a] = w;
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    #[inline]
    pub fn weight(&self, a: usize, b: usize) -> f64 {
        self.weights[a * self.n + b]
    }

    pub fn row(&self, a: usize) -> &[f64] {
        &self.weights[a * self.n..(a + 1) * self.n]
    }

    /// Neighbors of `a` with a positive weight, in id order.
    pub fn neighbors(&self, a: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.row(a)
            .iter()
            .enumerate()
            .filter(|&(_, &w)| w > 0.0)
            .map(|(b, &w)| (b, w))
    }

    /// Edges with positive weight as `(a, b, w)` with `a < b`.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.n).flat_map(move |a| {
            ((a + 1)..self.n).filter_map(move |b| {
                let w = self.weight(a, b);
                (w > 0.0).then_some((a, b, w))
            })
        })
    }

    pub fn edge_count(&self) -> usize {
        self.edges().count()
    }

    pub fn max_weight(&self) -> f64 {
        self.weights.iter().copied().fold(0.0, f64::max)
    }

    /// True when the matrix is symmetric, non-negative, finite and has a zero diagonal.
    pub fn is_well_formed(&self) -> bool {
        (0..self.n).all(|a| {
            self.weight(a, a) == 0.0
                && (0..self.n).all(|b| {
                    let w = self.weight(a, b);
                    w.is_finite() && w >= 0.0 && w == self.weight(b, a)
                })
        })
    }

    pub(crate) fn weights_mut(&mut self) -> &mut [f64] {
        &mut self.weights
    }
}

/// Builds the complete weighted graph whose edge weights are `corr` evaluated
/// for every element pair.
pub fn build_correlation_graph<F>(net: &Network, corr: F) -> Result<CorrelationGraph>
where
    F: Fn(&Element, &Element) -> f64,
{
    let n = net.len();
    if n < 2 {
        return Err(Error::InvalidNetwork(format!(
            "correlation graph needs at least 2 elements, got {n}"
        )));
    }
    let mut g = CorrelationGraph::empty(n);
    let elements = net.elements();
    for a in 0..n {
        for b in (a + 1)..n {
            let ab = corr(&elements[a], &elements[b]);
            let ba = corr(&elements[b], &elements[a]);
            for value in [ab, ba] {
                if !(value.is_finite() && value >= 0.0) {
                    return Err(Error::InvalidCorrelation { a, b, value });
                }
            }
            let scale = ab.abs().max(ba.abs()).max(f64::MIN_POSITIVE);
            if (ab - ba).abs() > 1e-12 * scale {
                return Err(Error::AsymmetricCorrelation { a, b, ab, ba });
            }
            g.set(a, b, ab);
        }
    }
    Ok(g)
}

/// Weighted mean of subnet qualities. With weights equal to each subnet's
/// share of evaluation points this reproduces the global mean exactly; equal
/// weights give the plain average over subnets.
pub fn aggregate_quality(subnet_qualities: &[(f64, f64)]) -> Result<f64> {
    if subnet_qualities.is_empty() {
        return Err(Error::EmptyAggregate);
    }
    let mut weighted = 0.0;
    let mut total = 0.0;
    for &(quality, weight) in subnet_qualities {
        if !(weight.is_finite() && weight > 0.0) {
            return Err(Error::InvalidWeight(weight));
        }
        weighted += weight * quality;
        total += weight;
    }
    Ok(weighted / total)
}
