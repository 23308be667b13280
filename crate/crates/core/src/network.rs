//! Directed port graph of optical components and its steady-state solver.
//!
//! Every component port carries one outgoing field amplitude. Connecting two
//! ports makes each one's outgoing field the other's incoming field; a port
//! left unconnected is *open*: light leaves the network there and an external
//! field (vacuum unless configured otherwise) enters there.
//!
//! At a given sideband offset `ω` (relative to the main carrier) the outgoing
//! fields obey `x = A(ω) x + b`, solved densely as `(I − A) x = b`.
//!
//! Sign conventions:
//!
//! * mirror, power reflectivity `R`: front reflection `+r e^{2iφ}`, back
//!   reflection `−r e^{−2iφ}`, transmission `+t`, with `φ` the tuning;
//! * beamsplitter: ports 0,1 on the front face reflect into each other,
//!   2,3 on the back face likewise; transmission pairs are 0↔2 and 1↔3;
//! * space of length `ℓ`: `e^{+iωℓ/c}`. Macroscopic lengths are integer
//!   numbers of carrier wavelengths; microscopic positions are tunings.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;

use num_traits::Zero;

use crate::linalg::{CMatrix, Lu};
use crate::twophoton::{transfer_to_twophoton, AngularFrequency, Channel, SpectralDensityMatrix, TwoPhotonMatrix};
use crate::{Error, Result, C64, SPEED_OF_LIGHT};

pub type ComponentId = usize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PortRef {
    pub component: ComponentId,
    pub port: usize,
}

impl PortRef {
    pub fn new(component: ComponentId, port: usize) -> Self {
        PortRef { component, port }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ComponentKind {
    /// Two ports: 0 front, 1 back.
    Mirror { transmission: f64, loss: f64, tuning: f64 },
    /// Four ports, see module docs.
    BeamSplitter { transmission: f64, loss: f64, tuning: f64 },
    /// Two ports.
    Space { length: f64 },
    /// Four ports: 0 and 1 on the main path, 2 and 3 admit vacuum. Field on
    /// the main path is scaled by `√(1−ε)`, side ports couple with `√ε`.
    Loss { epsilon: f64 },
    /// Ideal circulator. Ports: 0 interferometer, 1 injection, 2 detection,
    /// 3 dump. Routes 1→0, 0→2, 2→3, 3→1.
    Isolator,
    /// Ideal frequency separator. Port 0 is the common port; sideband offsets
    /// below `split` leave through port 1, the rest through port 2. Port 3
    /// feeds vacuum into whichever of 1 and 2 is not fed from port 0.
    BandSplitter { split: f64 },
}

impl ComponentKind {
    pub fn port_count(&self) -> usize {
        match self {
            ComponentKind::Mirror { .. } | ComponentKind::Space { .. } => 2,
            _ => 4,
        }
    }

    /// True when the element itself dissipates power (mirror or splitter
    /// loss) instead of routing it to an open port.
    pub fn is_lossy(&self) -> bool {
        match self {
            ComponentKind::Mirror { loss, .. } | ComponentKind::BeamSplitter { loss, .. } => *loss > 0.0,
            _ => false,
        }
    }

    fn validate(&self) -> Result<()> {
        match *self {
            ComponentKind::Mirror { transmission, loss, .. }
            | ComponentKind::BeamSplitter { transmission, loss, .. } => {
                if !(0.0..=1.0).contains(&transmission) || !(0.0..=1.0).contains(&loss) {
                    return Err(Error::invalid("transmission/loss", "must lie in [0, 1]"));
                }
                if transmission + loss > 1.0 + 1e-15 {
                    return Err(Error::invalid(
                        "transmission/loss",
                        format!("T + L = {} exceeds 1", transmission + loss),
                    ));
                }
            }
            ComponentKind::Space { length } => {
                if !(length >= 0.0) || !length.is_finite() {
                    return Err(Error::invalid("length", "must be finite and >= 0"));
                }
            }
            ComponentKind::Loss { epsilon } => {
                if !(0.0..1.0).contains(&epsilon) {
                    return Err(Error::invalid("epsilon", format!("{epsilon} outside [0, 1)")));
                }
            }
            ComponentKind::Isolator | ComponentKind::BandSplitter { .. } => {}
        }
        Ok(())
    }

    /// Non-zero entries `(out_port, in_port, coefficient)` of the component's
    /// scattering matrix at sideband offset `omega`.
    pub fn scattering(&self, omega: f64) -> Vec<(usize, usize, C64)> {
        let one = C64::new(1.0, 0.0);
        match *self {
            ComponentKind::Mirror {
                transmission,
                loss,
                tuning,
            } => {
                let r = (1.0 - transmission - loss).max(0.0).sqrt();
                let t = C64::new(transmission.sqrt(), 0.0);
                let front = C64::from_polar(r, 2.0 * tuning);
                let back = -C64::from_polar(r, -2.0 * tuning);
                vec![(0, 0, front), (0, 1, t), (1, 0, t), (1, 1, back)]
            }
            ComponentKind::BeamSplitter {
                transmission,
                loss,
                tuning,
            } => {
                let r = (1.0 - transmission - loss).max(0.0).sqrt();
                let t = C64::new(transmission.sqrt(), 0.0);
                let front = C64::from_polar(r, 2.0 * tuning);
                let back = -C64::from_polar(r, -2.0 * tuning);
                vec![
                    (1, 0, front),
                    (0, 1, front),
                    (3, 2, back),
                    (2, 3, back),
                    (2, 0, t),
                    (0, 2, t),
                    (3, 1, t),
                    (1, 3, t),
                ]
            }
            ComponentKind::Space { length } => {
                let p = C64::from_polar(1.0, omega * length / SPEED_OF_LIGHT);
                vec![(0, 1, p), (1, 0, p)]
            }
            ComponentKind::Loss { epsilon } => {
                let tau = C64::new((1.0 - epsilon).sqrt(), 0.0);
                let rho = C64::new(epsilon.sqrt(), 0.0);
                vec![
                    (1, 0, tau),
                    (1, 2, rho),
                    (3, 0, -rho),
                    (3, 2, tau),
                    (0, 1, tau),
                    (0, 3, rho),
                    (2, 1, -rho),
                    (2, 3, tau),
                ]
            }
            ComponentKind::Isolator => vec![(0, 1, one), (2, 0, one), (3, 2, one), (1, 3, one)],
            ComponentKind::BandSplitter { split } => {
                if omega < split {
                    vec![(1, 0, one), (0, 1, one), (2, 3, one), (3, 2, one)]
                } else {
                    vec![(2, 0, one), (0, 2, one), (1, 3, one), (3, 1, one)]
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Component {
    pub name: String,
    pub kind: ComponentKind,
}

/// Extra field injected directly into a component's outgoing port (used for
/// the gravitational-wave sidebands generated at the end mirrors).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DirectSource {
    pub port: PortRef,
    pub amplitude: C64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct OpticalNetwork {
    components: Vec<Component>,
    offsets: Vec<usize>,
    links: Vec<Option<usize>>,
    input_labels: BTreeMap<usize, String>,
    detectors: Vec<(String, usize)>,
}

impl OpticalNetwork {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, name: &str, kind: ComponentKind) -> Result<ComponentId> {
        kind.validate()?;
        let id = self.components.len();
        self.offsets.push(self.links.len());
        self.links.extend(core::iter::repeat_n(None, kind.port_count()));
        self.components.push(Component {
            name: name.to_string(),
            kind,
        });
        Ok(id)
    }

    pub fn component(&self, id: ComponentId) -> &Component {
        &self.components[id]
    }

    pub fn components(&self) -> &[Component] {
        &self.components
    }

    pub fn find(&self, name: &str) -> Option<ComponentId> {
        self.components.iter().position(|c| c.name == name)
    }

    /// Replaces a component's parameters, keeping its connections.
    pub fn set_kind(&mut self, id: ComponentId, kind: ComponentKind) -> Result<()> {
        kind.validate()?;
        if kind.port_count() != self.components[id].kind.port_count() {
            return Err(Error::invalid("kind", "port count must not change"));
        }
        self.components[id].kind = kind;
        Ok(())
    }

    pub fn port_count(&self) -> usize {
        self.links.len()
    }

    fn global(&self, p: PortRef) -> Result<usize> {
        let c = self
            .components
            .get(p.component)
            .ok_or_else(|| Error::UnknownPort(format!("component #{}", p.component)))?;
        if p.port >= c.kind.port_count() {
            return Err(Error::UnknownPort(format!("{}:{}", c.name, p.port)));
        }
        Ok(self.offsets[p.component] + p.port)
    }

    fn port_of(&self, g: usize) -> PortRef {
        let c = self.offsets.partition_point(|&o| o <= g) - 1;
        PortRef::new(c, g - self.offsets[c])
    }

    pub fn port_name(&self, p: PortRef) -> String {
        format!("{}:{}", self.components[p.component].name, p.port)
    }

    pub fn connect(&mut self, a: PortRef, b: PortRef) -> Result<()> {
        let (ga, gb) = (self.global(a)?, self.global(b)?);
        for (g, p) in [(ga, a), (gb, b)] {
            if self.links[g].is_some() || self.input_labels.contains_key(&g) || self.detectors.iter().any(|d| d.1 == g) {
                return Err(Error::PortInUse {
                    component: self.components[p.component].name.clone(),
                    port: p.port,
                });
            }
        }
        if ga == gb {
            return Err(Error::invalid("connect", "cannot connect a port to itself"));
        }
        self.links[ga] = Some(gb);
        self.links[gb] = Some(ga);
        Ok(())
    }

    /// Names an open port as an injection point (laser, squeezer, ...).
    pub fn label_input(&mut self, label: &str, p: PortRef) -> Result<()> {
        let g = self.global(p)?;
        if self.links[g].is_some() {
            return Err(Error::PortInUse {
                component: self.components[p.component].name.clone(),
                port: p.port,
            });
        }
        self.input_labels.insert(g, label.to_string());
        Ok(())
    }

    /// Names an open port as a detection point.
    pub fn add_detector(&mut self, label: &str, p: PortRef) -> Result<()> {
        let g = self.global(p)?;
        if self.links[g].is_some() {
            return Err(Error::PortInUse {
                component: self.components[p.component].name.clone(),
                port: p.port,
            });
        }
        self.detectors.push((label.to_string(), g));
        Ok(())
    }

    pub fn detectors(&self) -> impl Iterator<Item = &str> {
        self.detectors.iter().map(|d| d.0.as_str())
    }

    fn detector_port(&self, label: &str) -> Result<usize> {
        self.detectors
            .iter()
            .find(|d| d.0 == label)
            .map(|d| d.1)
            .ok_or_else(|| Error::UnknownPort(label.to_string()))
    }

    /// Open ports in port order, each with its label (explicit or
    /// `component:port`).
    pub fn open_inputs(&self) -> Vec<(String, PortRef)> {
        (0..self.links.len())
            .filter(|&g| self.links[g].is_none())
            .map(|g| {
                let p = self.port_of(g);
                let label = self
                    .input_labels
                    .get(&g)
                    .cloned()
                    .unwrap_or_else(|| self.port_name(p));
                (label, p)
            })
            .collect()
    }

    pub fn input_port(&self, label: &str) -> Result<PortRef> {
        if let Some((&g, _)) = self.input_labels.iter().find(|(_, l)| l.as_str() == label) {
            return Ok(self.port_of(g));
        }
        self.open_inputs()
            .into_iter()
            .find(|(l, _)| l == label)
            .map(|(_, p)| p)
            .ok_or_else(|| Error::UnknownPort(label.to_string()))
    }

    pub fn has_internal_loss(&self) -> bool {
        self.components.iter().any(|c| c.kind.is_lossy())
    }

    /// Assembles and factors `I − A(ω)`.
    pub fn factor(&self, offset: AngularFrequency) -> Result<FactoredSystem> {
        let n = self.links.len();
        let mut m = CMatrix::identity(n);
        for (c, comp) in self.components.iter().enumerate() {
            let base = self.offsets[c];
            for (q, p, coeff) in comp.kind.scattering(offset.0) {
                if let Some(src) = self.links[base + p] {
                    m[(base + q, src)] -= coeff;
                }
            }
        }
        let lu = Lu::factor(m).ok_or(Error::SingularSystem { offset: offset.0 })?;
        Ok(FactoredSystem { offset, lu })
    }

    fn injection_at(&self, p: PortRef, omega: f64) -> Vec<(usize, C64)> {
        let base = self.offsets[p.component];
        self.components[p.component]
            .kind
            .scattering(omega)
            .into_iter()
            .filter(|&(_, i, _)| i == p.port)
            .map(|(q, _, c)| (base + q, c))
            .collect()
    }

    /// Solves for every outgoing field given open-port injections and direct
    /// sources.
    pub fn solve_fields(
        &self,
        offset: AngularFrequency,
        inputs: &[(PortRef, C64)],
        direct: &[DirectSource],
    ) -> Result<FieldSolution> {
        let sys = self.factor(offset)?;
        let mut b = vec![C64::zero(); self.links.len()];
        for &(p, amp) in inputs {
            let g = self.global(p)?;
            if self.links[g].is_some() {
                return Err(Error::invalid("input", format!("{} is not an open port", self.port_name(p))));
            }
            for (row, coeff) in self.injection_at(p, offset.0) {
                b[row] += coeff * amp;
            }
        }
        for s in direct {
            b[self.global(s.port)?] += s.amplitude;
        }
        Ok(FieldSolution {
            offset,
            fields: sys.lu.solve(&b),
            offsets: self.offsets.clone(),
        })
    }

    /// Classical carrier solution for a laser of `power` watts entering the
    /// open port `input`.
    pub fn solve_carrier(&self, input: &str, power: f64) -> Result<FieldSolution> {
        let p = self.input_port(input)?;
        self.solve_fields(AngularFrequency::ZERO, &[(p, C64::new(power.sqrt(), 0.0))], &[])
    }

    /// Transfer from every open input to every detector at one offset.
    pub fn transfers(&self, offset: AngularFrequency) -> Result<TransferSet> {
        let sys = self.factor(offset)?;
        let inputs = self.open_inputs();
        let mut transfers = BTreeMap::new();
        for (det, g) in &self.detectors {
            let row = sys.output_row(*g, self.links.len());
            for (label, p) in &inputs {
                let t = self
                    .injection_at(*p, offset.0)
                    .into_iter()
                    .map(|(j, c)| c * row[j])
                    .sum();
                transfers.insert((label.clone(), det.clone()), t);
            }
        }
        Ok(TransferSet {
            frequency: offset,
            transfers,
        })
    }

    /// Transfers at `carrier_offset ± Ω`.
    pub fn solve_sidebands(&self, carrier_offset: AngularFrequency, omega: AngularFrequency) -> Result<SidebandTransfers> {
        if !(omega.0 > 0.0) {
            return Err(Error::invalid("Ω", "sideband frequency must be > 0"));
        }
        Ok(SidebandTransfers {
            carrier_offset,
            upper: self.transfers(carrier_offset + omega)?,
            lower: self.transfers(carrier_offset - omega)?,
        })
    }

    /// Full scattering matrix between open ports: entry `(j, k)` is the field
    /// leaving open port `j` for unit field entering open port `k`.
    pub fn scattering_matrix(&self, offset: AngularFrequency) -> Result<(Vec<String>, CMatrix)> {
        let sys = self.factor(offset)?;
        let inputs = self.open_inputs();
        let n = inputs.len();
        let mut s = CMatrix::zeros(n, n);
        for (k, (_, p)) in inputs.iter().enumerate() {
            let mut b = vec![C64::zero(); self.links.len()];
            for (row, coeff) in self.injection_at(*p, offset.0) {
                b[row] += coeff;
            }
            let x = sys.lu.solve(&b);
            for (j, (_, q)) in inputs.iter().enumerate() {
                s[(j, k)] = x[self.offsets[q.component] + q.port];
            }
        }
        Ok((inputs.into_iter().map(|(l, _)| l).collect(), s))
    }

    /// Inserts a loss element of power fraction `epsilon` behind `port`. If
    /// the port is connected the element is spliced into the link, otherwise
    /// it is appended and its far side becomes the new open port. The two
    /// side ports of the element become new vacuum inputs.
    pub fn attach_loss(&self, name: &str, port: PortRef, epsilon: f64) -> Result<OpticalNetwork> {
        if !(0.0..1.0).contains(&epsilon) {
            return Err(Error::invalid("epsilon", format!("{epsilon} outside [0, 1)")));
        }
        let mut net = self.clone();
        if epsilon == 0.0 {
            return Ok(net);
        }
        let g = net.global(port)?;
        let loss = net.add(name, ComponentKind::Loss { epsilon })?;
        match net.links[g] {
            Some(other) => {
                net.links[g] = None;
                net.links[other] = None;
                let other = net.port_of(other);
                net.connect(port, PortRef::new(loss, 0))?;
                net.connect(PortRef::new(loss, 1), other)?;
            }
            None => {
                // Move any label/detector from the old open port to the new one.
                let new_g = net.global(PortRef::new(loss, 1))?;
                if let Some(l) = net.input_labels.remove(&g) {
                    net.input_labels.insert(new_g, l);
                }
                for d in net.detectors.iter_mut() {
                    if d.1 == g {
                        d.1 = new_g;
                    }
                }
                net.connect(port, PortRef::new(loss, 0))?;
            }
        }
        Ok(net)
    }

    /// Joint quadrature covariance at the requested detection channels.
    ///
    /// Every open input contributes `M_k S_k M_kᴴ`, where `M_k` holds the
    /// two-photon matrices from input `k` to each channel, evaluated at the
    /// channel's band. Inputs without an entry in `sources` carry vacuum.
    /// Power dissipated inside lossy mirrors is replaced by vacuum so that the
    /// all-vacuum output is exactly the identity.
    pub fn noise_covariance_at_detectors(
        &self,
        channels: &[DetectionChannel],
        sources: &[InputCovariance],
        omega: AngularFrequency,
    ) -> Result<SpectralDensityMatrix> {
        if !(omega.0 > 0.0) {
            return Err(Error::invalid("Ω", "sideband frequency must be > 0"));
        }
        let mut bands: Vec<f64> = Vec::new();
        for ch in channels {
            if !bands.contains(&ch.band.0) {
                bands.push(ch.band.0);
            }
        }
        let inputs = self.open_inputs();
        for s in sources {
            if !inputs.iter().any(|(l, _)| *l == s.input) {
                return Err(Error::MissingTransfer(s.input.clone()));
            }
            if s.covariance.dim() != 2 * s.bands.len() {
                return Err(Error::DimensionMismatch {
                    expected: 2 * s.bands.len(),
                    found: s.covariance.dim(),
                });
            }
        }
        let det_ports: Vec<usize> = channels
            .iter()
            .map(|c| self.detector_port(&c.detector))
            .collect::<Result<_>>()?;

        let nch = channels.len();
        let nb = bands.len();
        let n = self.links.len();
        // t[sideband][channel][input]
        let mut t = [vec![vec![C64::zero(); inputs.len()]; nch], vec![vec![C64::zero(); inputs.len()]; nch]];
        for &band in &bands {
            for (sb, sign) in [(0usize, 1.0), (1usize, -1.0)] {
                let off = AngularFrequency(band + sign * omega.0);
                let sys = self.factor(off)?;
                for (i, ch) in channels.iter().enumerate() {
                    if ch.band.0 != band {
                        continue;
                    }
                    let row = sys.output_row(det_ports[i], n);
                    for (k, (_, p)) in inputs.iter().enumerate() {
                        t[sb][i][k] = self
                            .injection_at(*p, off.0)
                            .into_iter()
                            .map(|(j, c)| c * row[j])
                            .sum();
                    }
                }
            }
        }

        let band_index = |b: f64| bands.iter().position(|x| *x == b).unwrap();
        let mut total = CMatrix::zeros(2 * nch, 2 * nch);
        for (k, (label, _)) in inputs.iter().enumerate() {
            let mut m = CMatrix::zeros(2 * nch, 2 * nb);
            for (i, ch) in channels.iter().enumerate() {
                let tp = transfer_to_twophoton(t[0][i][k], t[1][i][k]);
                m.set_block(2 * i, 2 * band_index(ch.band.0), &tp.to_matrix());
            }
            let s_k = match sources.iter().find(|s| &s.input == label) {
                None => CMatrix::identity(2 * nb),
                Some(src) => {
                    let mut s = CMatrix::identity(2 * nb);
                    for (a, ba) in src.bands.iter().enumerate() {
                        let Some(ia) = bands.iter().position(|x| *x == ba.0) else { continue };
                        for (b, bb) in src.bands.iter().enumerate() {
                            let Some(ib) = bands.iter().position(|x| *x == bb.0) else { continue };
                            s.set_block(2 * ia, 2 * ib, &src.covariance.matrix().block(2 * a, 2 * b, 2, 2));
                        }
                    }
                    s
                }
            };
            total = &total + &m.congruence(&s_k);
        }

        // Vacuum replacing power dissipated inside lossy optics, per band.
        if self.has_internal_loss() {
            for i in 0..nch {
                for j in 0..nch {
                    if channels[i].band.0 != channels[j].band.0 {
                        continue;
                    }
                    let delta = if i == j { 1.0 } else { 0.0 };
                    let q = |sb: usize| -> C64 {
                        let s: C64 = (0..inputs.len()).map(|k| t[sb][i][k] * t[sb][j][k].conj()).sum();
                        C64::new(delta, 0.0) - s
                    };
                    let (qp, qm) = (q(0), q(1).conj());
                    let p = (qp + qm) * 0.5;
                    let d = C64::i() * (qp - qm) * 0.5;
                    total[(2 * i, 2 * j)] += p;
                    total[(2 * i + 1, 2 * j + 1)] += p;
                    total[(2 * i, 2 * j + 1)] += d;
                    total[(2 * i + 1, 2 * j)] -= d;
                }
            }
        }

        // Local oscillator reference phase of each detector.
        let mut frame = CMatrix::zeros(2 * nch, 2 * nch);
        for (i, ch) in channels.iter().enumerate() {
            frame.set_block(2 * i, 2 * i, &TwoPhotonMatrix::rotation(-ch.lo_reference).to_matrix());
        }
        let s = frame.congruence(&total);
        // Symmetrise away rounding so the result passes the Hermitian check.
        let sh = (&s + &s.adjoint()).scale(C64::new(0.5, 0.0));
        let labels = channels
            .iter()
            .flat_map(|c| [Channel(format!("{}.q1", c.detector)), Channel(format!("{}.q2", c.detector))])
            .collect();
        SpectralDensityMatrix::new(labels, sh)
    }

    /// Quadrature response at `detector` (band 0) to direct sources that
    /// emit the same amplitude at both sidebands `±Ω`.
    pub fn signal_quadratures(
        &self,
        detector: &str,
        sources: &[DirectSource],
        omega: AngularFrequency,
        lo_reference: f64,
    ) -> Result<[C64; 2]> {
        let g = self.detector_port(detector)?;
        let n = self.links.len();
        let mut amp = [C64::zero(); 2];
        for (sb, off) in [(0usize, omega), (1usize, -omega)] {
            let sys = self.factor(off)?;
            let row = sys.output_row(g, n);
            for s in sources {
                amp[sb] += row[self.global(s.port)?] * s.amplitude;
            }
        }
        let rot = C64::from_polar(1.0, -lo_reference);
        let l = (amp[1] * rot).conj();
        let u = amp[0] * rot;
        let h = core::f64::consts::FRAC_1_SQRT_2;
        Ok([(u + l) * h, (u - l) * h / C64::i()])
    }
}

#[derive(Debug)]
pub struct FactoredSystem {
    pub offset: AngularFrequency,
    lu: Lu,
}

impl FactoredSystem {
    /// Row `g` of `(I − A)⁻¹`: field at port `g` per unit source anywhere.
    pub fn output_row(&self, g: usize, n: usize) -> Vec<C64> {
        let mut e = vec![C64::zero(); n];
        e[g] = C64::new(1.0, 0.0);
        self.lu.solve_transposed(&e)
    }
}

#[derive(Debug, Clone)]
pub struct FieldSolution {
    pub offset: AngularFrequency,
    fields: Vec<C64>,
    offsets: Vec<usize>,
}

impl FieldSolution {
    /// Field leaving the component through `p`.
    pub fn outgoing(&self, p: PortRef) -> C64 {
        self.fields[self.offsets[p.component] + p.port]
    }

    pub fn power(&self, p: PortRef) -> f64 {
        self.outgoing(p).norm_sqr()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransferSet {
    pub frequency: AngularFrequency,
    /// `(input label, detector label) → amplitude transfer`
    pub transfers: BTreeMap<(String, String), C64>,
}

impl TransferSet {
    pub fn get(&self, input: &str, detector: &str) -> Option<C64> {
        self.transfers.get(&(input.to_string(), detector.to_string())).copied()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SidebandTransfers {
    pub carrier_offset: AngularFrequency,
    pub upper: TransferSet,
    pub lower: TransferSet,
}

impl SidebandTransfers {
    pub fn twophoton(&self, input: &str, detector: &str) -> Result<TwoPhotonMatrix> {
        let up = self.upper.get(input, detector).ok_or_else(|| Error::MissingTransfer(input.to_string()))?;
        let lo = self.lower.get(input, detector).ok_or_else(|| Error::MissingTransfer(input.to_string()))?;
        Ok(transfer_to_twophoton(up, lo))
    }
}

/// One homodyne channel: a detector port read out in the band around
/// `band`, with its local oscillator phase reference.
#[derive(Debug, Clone, PartialEq)]
pub struct DetectionChannel {
    pub detector: String,
    pub band: AngularFrequency,
    pub lo_reference: f64,
}

/// Non-vacuum state entering an open port, over one or more bands.
#[derive(Debug, Clone, PartialEq)]
pub struct InputCovariance {
    pub input: String,
    pub bands: Vec<AngularFrequency>,
    pub covariance: SpectralDensityMatrix,
}

#[cfg(test)]
mod tests {
    use super::*;
    use core::f64::consts::PI;

    fn mirror(t: f64) -> ComponentKind {
        ComponentKind::Mirror {
            transmission: t,
            loss: 0.0,
            tuning: 0.0,
        }
    }

    #[test]
    fn component_scattering_is_unitary() {
        let kinds = [
            mirror(0.3),
            ComponentKind::BeamSplitter {
                transmission: 0.5,
                loss: 0.0,
                tuning: 0.37,
            },
            ComponentKind::Space { length: 3.0 },
            ComponentKind::Loss { epsilon: 0.2 },
            ComponentKind::Isolator,
            ComponentKind::BandSplitter { split: 1.0 },
        ];
        for k in kinds {
            let n = k.port_count();
            for omega in [0.0, 2.0, 1e6] {
                let mut s = CMatrix::zeros(n, n);
                for (q, p, c) in k.scattering(omega) {
                    s[(q, p)] += c;
                }
                let d = &(&s.adjoint() * &s) - &CMatrix::identity(n);
                assert!(d.max_abs() < 1e-14, "{k:?}");
            }
        }
    }

    #[test]
    fn invalid_optics_rejected() {
        let mut net = OpticalNetwork::new();
        assert!(net
            .add(
                "m",
                ComponentKind::Mirror {
                    transmission: 0.7,
                    loss: 0.4,
                    tuning: 0.0
                }
            )
            .is_err());
        assert!(net.add("l", ComponentKind::Loss { epsilon: 1.0 }).is_err());
    }

    #[test]
    fn single_mirror_is_constant() {
        let mut net = OpticalNetwork::new();
        let m = net.add("m", mirror(0.2)).unwrap();
        net.label_input("in", PortRef::new(m, 0)).unwrap();
        net.add_detector("refl", PortRef::new(m, 0)).unwrap();
        net.add_detector("trans", PortRef::new(m, 1)).unwrap();
        let sb = net.solve_sidebands(AngularFrequency::ZERO, AngularFrequency(1e-9)).unwrap();
        let r = sb.upper.get("in", "refl").unwrap();
        let t = sb.lower.get("in", "trans").unwrap();
        assert!((r - C64::new(0.8f64.sqrt(), 0.0)).norm() < 1e-15);
        assert!((t - C64::new(0.2f64.sqrt(), 0.0)).norm() < 1e-15);
    }

    #[test]
    fn open_port_injection_and_direct_sources() {
        // input -> space -> output, checks both injection routes agree
        let mut net = OpticalNetwork::new();
        let s = net.add("s", ComponentKind::Space { length: 1.0 }).unwrap();
        let om = AngularFrequency(SPEED_OF_LIGHT * PI / 2.0);
        let sol = net.solve_fields(om, &[(PortRef::new(s, 0), C64::new(1.0, 0.0))], &[]).unwrap();
        assert!((sol.outgoing(PortRef::new(s, 1)) - C64::i()).norm() < 1e-14);
        let sol = net
            .solve_fields(
                om,
                &[],
                &[DirectSource {
                    port: PortRef::new(s, 1),
                    amplitude: C64::new(2.0, 0.0),
                }],
            )
            .unwrap();
        assert!((sol.outgoing(PortRef::new(s, 1)) - 2.0).norm() < 1e-14);
    }

    #[test]
    fn connecting_twice_fails() {
        let mut net = OpticalNetwork::new();
        let a = net.add("a", mirror(0.1)).unwrap();
        let b = net.add("b", mirror(0.1)).unwrap();
        let c = net.add("c", mirror(0.1)).unwrap();
        net.connect(PortRef::new(a, 1), PortRef::new(b, 0)).unwrap();
        assert!(matches!(
            net.connect(PortRef::new(a, 1), PortRef::new(c, 0)),
            Err(Error::PortInUse { .. })
        ));
    }

    #[test]
    fn lossless_perfect_loop_is_singular() {
        // Two perfect mirrors facing each other, tuned on resonance: no
        // steady state exists.
        let mut net = OpticalNetwork::new();
        let a = net.add("a", mirror(0.0)).unwrap();
        let s = net.add("s", ComponentKind::Space { length: 1.0 }).unwrap();
        let b = net.add("b", mirror(0.0)).unwrap();
        net.connect(PortRef::new(a, 1), PortRef::new(s, 0)).unwrap();
        net.connect(PortRef::new(s, 1), PortRef::new(b, 0)).unwrap();
        // back of a reflects −1, front of b reflects +1: round trip −1; tune a.
        net.set_kind(
            a,
            ComponentKind::Mirror {
                transmission: 0.0,
                loss: 0.0,
                tuning: PI / 2.0,
            },
        )
        .unwrap();
        assert!(matches!(
            net.factor(AngularFrequency::ZERO),
            Err(Error::SingularSystem { .. })
        ));
    }

    #[test]
    fn attach_loss_zero_is_identity_and_registers_inputs() {
        let mut net = OpticalNetwork::new();
        let m = net.add("m", mirror(0.5)).unwrap();
        net.label_input("in", PortRef::new(m, 0)).unwrap();
        let same = net.attach_loss("L", PortRef::new(m, 1), 0.0).unwrap();
        assert_eq!(same, net);
        let lossy = net.attach_loss("L", PortRef::new(m, 1), 0.1).unwrap();
        assert_eq!(lossy.open_inputs().len(), net.open_inputs().len() + 2);
        assert!(net.attach_loss("L", PortRef::new(m, 1), 1.0).is_err());
        assert!(net.attach_loss("L", PortRef::new(m, 1), -0.1).is_err());
    }
}
