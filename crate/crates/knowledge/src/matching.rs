//! Feature and meta fact evaluation over a board view.

use std::cell::OnceCell;

use ggp_core::board::{BoardSpec, Piece};
use smallvec::SmallVec;

use crate::area::{area_of, in_bounds, spec_area_size};
use crate::feature::{reals, Feature, FeatureKind, MetaFact};

pub type Point = SmallVec<[f64; 4]>;

#[derive(Clone, Debug, PartialEq)]
pub struct BoardPiece<S> {
    pub sym: S,
    pub at: Point,
}

/// Board pieces of a state plus the coordinates of last turn's moves.
#[derive(Clone, Debug, Default)]
pub struct StateView<S> {
    pub pieces: Vec<BoardPiece<S>>,
    pub last: Vec<Point>,
}

impl StateView<String> {
    pub fn from_pieces(pieces: &[Piece], last: &[Vec<f64>]) -> StateView<String> {
        StateView {
            pieces: pieces
                .iter()
                .map(|(s, at)| BoardPiece { sym: s.clone(), at: at.iter().copied().collect() })
                .collect(),
            last: last.iter().map(|l| l.iter().copied().collect()).collect(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Geo {
    pub d_min: f64,
    pub d_max: f64,
    pub n_dims: usize,
    pub s: u32,
}

impl Geo {
    pub fn new(spec: &BoardSpec) -> Geo {
        Geo { d_min: spec.d_min, d_max: spec.d_max, n_dims: spec.n_dims, s: spec_area_size(spec) }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub(crate) enum MKind<S> {
    Proximity(u32),
    Border { distance: u32, lower: bool, dim: usize },
    AbsMove { sym: S, at: Vec<f64> },
    InArea { size: u32, area: Vec<u32>, sym: S },
    KNearest { k: usize, syms: Vec<S> },
    KNearest1D { k: usize, dim: usize, syms: Vec<S> },
    ItemsetsOnly,
    Never,
}

#[derive(Clone, Debug, PartialEq)]
pub(crate) enum MMeta<S> {
    Any(Vec<f64>),
    InArea { size: u32, area: Vec<u32>, sym: S },
    Never,
}

pub(crate) fn lower_kind<S: Ord>(k: &FeatureKind, n_dims: usize, sym: &impl Fn(&str) -> Option<S>) -> MKind<S> {
    let syms = |ps: &[String]| ps.iter().map(|p| sym(p)).collect::<Option<Vec<S>>>();
    let kind = match k {
        FeatureKind::Proximity { distance } => Some(MKind::Proximity(*distance)),
        FeatureKind::BorderDist { distance, lower, dimension } => (*dimension >= 1
            && *dimension <= n_dims)
            .then(|| MKind::Border { distance: *distance, lower: *lower, dim: dimension - 1 }),
        FeatureKind::AbsMove { piece, position } => {
            sym(piece).map(|s| MKind::AbsMove { sym: s, at: reals(position) })
        }
        FeatureKind::AbsMoveInArea { area_size, area, piece } => sym(piece)
            .map(|s| MKind::InArea { size: (*area_size).max(1), area: area.clone(), sym: s }),
        FeatureKind::KNearest { k, pieces } => {
            (*k >= 1 && pieces.len() == *k).then(|| syms(pieces)).flatten().map(|syms| {
                let mut syms = syms;
                syms.sort();
                MKind::KNearest { k: *k, syms }
            })
        }
        FeatureKind::KNearest1D { k, dimension, pieces } => (*k >= 1
            && pieces.len() == *k
            && *dimension >= 1
            && *dimension <= n_dims)
            .then(|| syms(pieces))
            .flatten()
            .map(|syms| MKind::KNearest1D { k: *k, dim: dimension - 1, syms }),
        FeatureKind::ItemsetsOnly => Some(MKind::ItemsetsOnly),
    };
    kind.unwrap_or(MKind::Never)
}

pub(crate) fn lower_meta<S>(m: &MetaFact, sym: &impl Fn(&str) -> Option<S>) -> MMeta<S> {
    match m {
        MetaFact::AnyPieceInField { position } => MMeta::Any(reals(position)),
        MetaFact::PieceInArea { area_size, area, piece } => match sym(piece) {
            Some(s) => MMeta::InArea { size: (*area_size).max(1), area: area.clone(), sym: s },
            None => MMeta::Never,
        },
    }
}

pub(crate) fn meta_holds<S: PartialEq>(m: &MMeta<S>, geo: &Geo, pieces: &[BoardPiece<S>]) -> bool {
    match m {
        MMeta::Any(at) => pieces.iter().any(|p| p.at.as_slice() == at.as_slice()),
        MMeta::InArea { size, area, sym } => pieces.iter().any(|p| {
            p.sym == *sym && area_of(&p.at, geo.d_min, *size).as_slice() == area.as_slice()
        }),
        MMeta::Never => false,
    }
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

fn cmp_point(a: &[f64], b: &[f64]) -> std::cmp::Ordering {
    a.iter()
        .zip(b)
        .map(|(x, y)| x.total_cmp(y))
        .find(|o| o.is_ne())
        .unwrap_or(a.len().cmp(&b.len()))
}

/// Pieces other than the one on `at`, nearest first; ties by symbol then
/// coordinates.
pub(crate) fn nearest<'a, S: Ord>(pieces: &'a [BoardPiece<S>], at: &[f64]) -> Vec<&'a BoardPiece<S>> {
    let mut v: Vec<(f64, &BoardPiece<S>)> = pieces
        .iter()
        .map(|p| (dist(&p.at, at), p))
        .filter(|(d, _)| *d > 0.0)
        .collect();
    v.sort_by(|a, b| {
        a.0.total_cmp(&b.0)
            .then_with(|| a.1.sym.cmp(&b.1.sym))
            .then_with(|| cmp_point(&a.1.at, &b.1.at))
    });
    v.into_iter().map(|x| x.1).collect()
}

/// Pieces on the axis-parallel line through `at` along `dim`.
pub(crate) fn nearest_1d<'a, S: Ord>(
    pieces: &'a [BoardPiece<S>],
    at: &[f64],
    dim: usize,
) -> Vec<&'a BoardPiece<S>> {
    let mut v: Vec<(f64, &BoardPiece<S>)> = pieces
        .iter()
        .filter(|p| p.at.iter().enumerate().all(|(i, &r)| i == dim || r == at[i]))
        .map(|p| ((p.at[dim] - at[dim]).abs(), p))
        .filter(|(d, _)| *d > 0.0)
        .collect();
    v.sort_by(|a, b| {
        a.0.total_cmp(&b.0)
            .then_with(|| a.1.sym.cmp(&b.1.sym))
            .then_with(|| cmp_point(&a.1.at, &b.1.at))
    });
    v.into_iter().map(|x| x.1).collect()
}

/// A candidate move with lazily computed neighbourhoods.
pub(crate) struct Cand<'a, S> {
    pub sym: &'a S,
    pub at: &'a [f64],
    near: OnceCell<Vec<S>>,
    near_1d: Vec<OnceCell<Vec<S>>>,
}

impl<'a, S: Ord + Clone> Cand<'a, S> {
    pub fn new(sym: &'a S, at: &'a [f64], n_dims: usize) -> Self {
        Cand { sym, at, near: OnceCell::new(), near_1d: (0..n_dims).map(|_| OnceCell::new()).collect() }
    }

    fn near(&self, pieces: &[BoardPiece<S>]) -> &[S] {
        self.near.get_or_init(|| nearest(pieces, self.at).into_iter().map(|p| p.sym.clone()).collect())
    }

    fn near_1d(&self, pieces: &[BoardPiece<S>], dim: usize) -> &[S] {
        self.near_1d[dim]
            .get_or_init(|| nearest_1d(pieces, self.at, dim).into_iter().map(|p| p.sym.clone()).collect())
    }
}

pub(crate) fn kind_matches<S: Ord + Clone>(
    k: &MKind<S>,
    geo: &Geo,
    view: &StateView<S>,
    cand: Option<&Cand<'_, S>>,
) -> bool {
    if matches!(k, MKind::ItemsetsOnly) {
        return true;
    }
    let Some(c) = cand else { return false };
    if c.at.len() != geo.n_dims {
        return false;
    }
    match k {
        MKind::Proximity(d) => view
            .last
            .iter()
            .map(|l| dist(l, c.at))
            .min_by(f64::total_cmp)
            .is_some_and(|m| m.floor() == *d as f64),
        MKind::Border { distance, lower, dim } => {
            let r = c.at[*dim];
            let gap = if *lower { r - geo.d_min } else { geo.d_max - r };
            gap.floor() == *distance as f64
        }
        MKind::AbsMove { sym, at } => c.sym == sym && c.at == at.as_slice(),
        MKind::InArea { size, area, sym } => {
            c.sym == sym && area_of(c.at, geo.d_min, *size).as_slice() == area.as_slice()
        }
        MKind::KNearest { k, syms } => {
            let near = c.near(&view.pieces);
            if near.len() < *k {
                return false;
            }
            let mut got: SmallVec<[&S; 8]> = near[..*k].iter().collect();
            got.sort();
            got.iter().copied().eq(syms.iter())
        }
        MKind::KNearest1D { k, dim, syms } => {
            let line = c.near_1d(&view.pieces, *dim);
            line.len() >= *k && line[..*k] == syms[..]
        }
        MKind::ItemsetsOnly | MKind::Never => false,
    }
}

/// Symbolic matching entry point; itemsets always gate.
pub fn match_feature(
    spec: &BoardSpec,
    f: &Feature,
    pieces: &[Piece],
    last: &[Vec<f64>],
    cand: Option<&Piece>,
) -> bool {
    let geo = Geo::new(spec);
    let view = StateView::from_pieces(pieces, last);
    let ident = |s: &str| Some(s.to_string());
    let kind = lower_kind(&f.kind, geo.n_dims, &ident);
    let c = cand.filter(|(_, at)| in_bounds(at, spec)).map(|(s, at)| Cand::new(s, at.as_slice(), geo.n_dims));
    if !kind_matches(&kind, &geo, &view, c.as_ref()) {
        return false;
    }
    if f.itemsets.is_empty() {
        return true;
    }
    f.itemsets.iter().any(|set| {
        set.iter().all(|m| meta_holds(&lower_meta(m, &ident), &geo, &view.pieces))
    })
}
