//! Features and meta facts in their symbolic form.

use std::cmp::Ordering;
use std::collections::BTreeSet;
use std::fmt;
use std::hash::{Hash, Hasher};

use ggp_core::board::{BoardSpec, Piece};

use crate::area::{area_of, spec_area_size};
use crate::matching::{nearest, nearest_1d, StateView};

/// A board coordinate with total ordering.
#[derive(Clone, Copy, Debug)]
pub struct Coord(pub f64);

impl PartialEq for Coord {
    fn eq(&self, o: &Self) -> bool {
        self.cmp(o) == Ordering::Equal
    }
}
impl Eq for Coord {}
impl PartialOrd for Coord {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}
impl Ord for Coord {
    fn cmp(&self, o: &Self) -> Ordering {
        (self.0 + 0.0).total_cmp(&(o.0 + 0.0))
    }
}
impl Hash for Coord {
    fn hash<H: Hasher>(&self, h: &mut H) {
        (self.0 + 0.0).to_bits().hash(h)
    }
}
impl fmt::Display for Coord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

pub fn coords(v: &[f64]) -> Vec<Coord> {
    v.iter().map(|&x| Coord(x)).collect()
}

pub fn reals(v: &[Coord]) -> Vec<f64> {
    v.iter().map(|c| c.0).collect()
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum MetaFact {
    AnyPieceInField { position: Vec<Coord> },
    PieceInArea { area_size: u32, area: Vec<u32>, piece: String },
}

/// Meta facts conjoined.
pub type Itemset = Vec<MetaFact>;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum FeatureClass {
    Proximity,
    BorderDist,
    AbsMove,
    AbsMoveInArea,
    KNearest,
    KNearest1D,
    ItemsetsOnly,
}

impl FeatureClass {
    pub const ALL: [FeatureClass; 7] = [
        FeatureClass::Proximity,
        FeatureClass::BorderDist,
        FeatureClass::AbsMove,
        FeatureClass::AbsMoveInArea,
        FeatureClass::KNearest,
        FeatureClass::KNearest1D,
        FeatureClass::ItemsetsOnly,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn element(self) -> &'static str {
        match self {
            FeatureClass::Proximity => "FeatureRelEuclidProximity",
            FeatureClass::BorderDist => "FeatureAbsEuclidBorderDist",
            FeatureClass::AbsMove => "FeatureAbsEuclidMove",
            FeatureClass::AbsMoveInArea => "FeatureAbsEuclidMoveInArea",
            FeatureClass::KNearest => "FeatureRelEuclidKNearest",
            FeatureClass::KNearest1D => "FeatureRelEuclidKNearest1D",
            FeatureClass::ItemsetsOnly => "FeatureItemsetsOnly",
        }
    }

    pub fn from_element(name: &str) -> Option<FeatureClass> {
        FeatureClass::ALL.into_iter().find(|c| c.element() == name)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum FeatureKind {
    Proximity { distance: u32 },
    /// `dimension` counts from 1.
    BorderDist { distance: u32, lower: bool, dimension: usize },
    AbsMove { piece: String, position: Vec<Coord> },
    AbsMoveInArea { area_size: u32, area: Vec<u32>, piece: String },
    KNearest { k: usize, pieces: Vec<String> },
    KNearest1D { k: usize, dimension: usize, pieces: Vec<String> },
    ItemsetsOnly,
}

impl FeatureKind {
    pub fn class(&self) -> FeatureClass {
        match self {
            FeatureKind::Proximity { .. } => FeatureClass::Proximity,
            FeatureKind::BorderDist { .. } => FeatureClass::BorderDist,
            FeatureKind::AbsMove { .. } => FeatureClass::AbsMove,
            FeatureKind::AbsMoveInArea { .. } => FeatureClass::AbsMoveInArea,
            FeatureKind::KNearest { .. } => FeatureClass::KNearest,
            FeatureKind::KNearest1D { .. } => FeatureClass::KNearest1D,
            FeatureKind::ItemsetsOnly => FeatureClass::ItemsetsOnly,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Feature {
    pub kind: FeatureKind,
    pub weight: f64,
    pub itemsets: Vec<Itemset>,
}

impl Feature {
    pub fn new(kind: FeatureKind, weight: f64) -> Feature {
        Feature { kind, weight, itemsets: Vec::new() }
    }

    /// Identity ignoring the weight.
    pub fn same_as(&self, o: &Feature) -> bool {
        self.kind == o.kind && self.itemsets == o.itemsets
    }
}

/// Largest K instantiated by the miner.
pub const K_MAX: usize = 3;

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Every class instance the candidate move exhibits, ItemsetsOnly included.
pub fn instantiate_features(
    spec: &BoardSpec,
    pieces: &[Piece],
    last: &[Vec<f64>],
    cand: &Piece,
) -> Vec<FeatureKind> {
    let (piece, at) = cand;
    let mut out = Vec::new();
    if at.len() != spec.n_dims {
        return out;
    }
    if let Some(d) = last.iter().map(|l| dist(l, at)).min_by(f64::total_cmp) {
        out.push(FeatureKind::Proximity { distance: d.floor() as u32 });
    }
    for (i, &r) in at.iter().enumerate() {
        out.push(FeatureKind::BorderDist {
            distance: (r - spec.d_min).floor() as u32,
            lower: true,
            dimension: i + 1,
        });
        out.push(FeatureKind::BorderDist {
            distance: (spec.d_max - r).floor() as u32,
            lower: false,
            dimension: i + 1,
        });
    }
    out.push(FeatureKind::AbsMove { piece: piece.clone(), position: coords(at) });
    let s = spec_area_size(spec);
    out.push(FeatureKind::AbsMoveInArea {
        area_size: s,
        area: area_of(at, spec.d_min, s).to_vec(),
        piece: piece.clone(),
    });
    let view = StateView::from_pieces(pieces, &[]);
    let near = nearest(&view.pieces, at);
    for k in 1..=K_MAX.min(near.len()) {
        let mut ps: Vec<String> = near[..k].iter().map(|p| p.sym.clone()).collect();
        ps.sort();
        out.push(FeatureKind::KNearest { k, pieces: ps });
    }
    for dim in 0..spec.n_dims {
        let line = nearest_1d(&view.pieces, at, dim);
        for k in 1..=K_MAX.min(line.len()) {
            out.push(FeatureKind::KNearest1D {
                k,
                dimension: dim + 1,
                pieces: line[..k].iter().map(|p| p.sym.clone()).collect(),
            });
        }
    }
    out.push(FeatureKind::ItemsetsOnly);
    out
}

/// Every meta fact instance present in a state.
pub fn state_metafacts(spec: &BoardSpec, pieces: &[Piece]) -> BTreeSet<MetaFact> {
    let s = spec_area_size(spec);
    let mut out = BTreeSet::new();
    for (piece, at) in pieces {
        out.insert(MetaFact::AnyPieceInField { position: coords(at) });
        out.insert(MetaFact::PieceInArea {
            area_size: s,
            area: area_of(at, spec.d_min, s).to_vec(),
            piece: piece.clone(),
        });
    }
    out
}

pub fn eval_metafact(spec: &BoardSpec, m: &MetaFact, pieces: &[Piece]) -> bool {
    match m {
        MetaFact::AnyPieceInField { position } => {
            pieces.iter().any(|p| coords(&p.1) == *position)
        }
        MetaFact::PieceInArea { area_size, area, piece } => pieces.iter().any(|p| {
            p.0 == *piece && area_of(&p.1, spec.d_min, (*area_size).max(1)).as_slice() == area.as_slice()
        }),
    }
}

/// Group form of AnyPieceInField over all board points.
pub fn any_piece_group(spec: &BoardSpec, pieces: &[Piece]) -> Vec<bool> {
    crate::area::board_points(spec)
        .iter()
        .map(|p| eval_metafact(spec, &MetaFact::AnyPieceInField { position: coords(p) }, pieces))
        .collect()
}

/// Group form of PieceInArea for one piece over all areas.
pub fn piece_in_area_group(spec: &BoardSpec, piece: &str, pieces: &[Piece]) -> Vec<bool> {
    let s = spec_area_size(spec);
    crate::area::all_areas(spec)
        .iter()
        .map(|a| {
            let m = MetaFact::PieceInArea { area_size: s, area: a.to_vec(), piece: piece.to_string() };
            eval_metafact(spec, &m, pieces)
        })
        .collect()
}
