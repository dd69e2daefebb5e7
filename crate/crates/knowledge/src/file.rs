//! Knowledge files.

use std::path::Path;

use roxmltree::Node;

use crate::error::{KnowledgeError, Result};
use crate::feature::{coords, Feature, FeatureClass, FeatureKind, Itemset, MetaFact};
use crate::params::Parameters;
use crate::xml::{self, boolean, child, elements, join, name, number, numbers, show_bool, text, XmlWriter};

#[derive(Clone, Debug, Default, PartialEq)]
pub struct PlayerKnowledge {
    pub role: String,
    pub winning: Vec<Feature>,
    pub losing: Vec<Feature>,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct KnowledgeFile {
    pub parameters: Parameters,
    pub players: Vec<PlayerKnowledge>,
}

impl KnowledgeFile {
    pub fn player(&self, role: &str) -> Option<&PlayerKnowledge> {
        self.players.iter().find(|p| p.role == role)
    }

    pub fn player_mut(&mut self, role: &str) -> &mut PlayerKnowledge {
        if let Some(i) = self.players.iter().position(|p| p.role == role) {
            return &mut self.players[i];
        }
        self.players.push(PlayerKnowledge { role: role.to_string(), ..Default::default() });
        self.players.last_mut().unwrap()
    }

    pub fn to_xml(&self) -> String {
        let mut w = XmlWriter::new();
        w.open("Knowledge", &[]);
        write_parameters(&mut w, &self.parameters);
        for p in &self.players {
            w.open("Player", &[("role", p.role.clone())]);
            for (tag, list) in [("WinningFeatures", &p.winning), ("LoosingFeatures", &p.losing)] {
                if list.is_empty() {
                    w.empty(tag, &[]);
                    continue;
                }
                w.open(tag, &[]);
                for f in list {
                    write_feature(&mut w, f);
                }
                w.close(tag);
            }
            w.close("Player");
        }
        w.close("Knowledge");
        w.finish()
    }

    pub fn from_xml(text: &str) -> Result<KnowledgeFile> {
        let doc = xml::parse(text)?;
        let root = doc.root_element();
        if name(root) != "Knowledge" {
            return Err(KnowledgeError::UnknownElement(name(root).to_string()));
        }
        let mut k = KnowledgeFile::default();
        for n in elements(root) {
            match name(n) {
                "Parameters" => k.parameters = read_parameters(n)?,
                "Player" => {
                    let role = n
                        .attribute("role")
                        .ok_or_else(|| KnowledgeError::Invalid("Player without role".into()))?;
                    let mut p = PlayerKnowledge { role: role.to_string(), ..Default::default() };
                    for list in elements(n) {
                        let dest = match name(list) {
                            "WinningFeatures" => &mut p.winning,
                            "LoosingFeatures" => &mut p.losing,
                            other => return Err(KnowledgeError::UnknownElement(other.to_string())),
                        };
                        for f in elements(list) {
                            dest.push(read_feature(f)?);
                        }
                    }
                    k.players.push(p);
                }
                other => return Err(KnowledgeError::UnknownElement(other.to_string())),
            }
        }
        Ok(k)
    }

    pub fn load(path: &Path) -> Result<KnowledgeFile> {
        let text = std::fs::read_to_string(path).map_err(|e| KnowledgeError::Io(format!("{}: {e}", path.display())))?;
        KnowledgeFile::from_xml(&text)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_xml()).map_err(|e| KnowledgeError::Io(format!("{}: {e}", path.display())))
    }
}

fn write_parameters(w: &mut XmlWriter, p: &Parameters) {
    w.open("Parameters", &[]);
    w.leaf("MaxKnowledgeSize", &p.max_knowledge_size.to_string());
    w.leaf("BaseValue", &p.base_value.to_string());
    w.leaf("ClassWeights", &join(&p.class_weights));
    w.leaf("LearningFactor", &p.learning_factor.to_string());
    w.leaf("WinningWeight", &p.winning_weight.to_string());
    w.leaf("LoosingWeight", &p.losing_weight.to_string());
    w.leaf("SelectionImpact", &p.selection_impact.to_string());
    w.leaf("SimulationImpact", &p.simulation_impact.to_string());
    w.leaf("WideningC", &p.widening_c.to_string());
    w.leaf("WideningAlpha", &p.widening_alpha.to_string());
    let bools = |v: &[bool]| v.iter().map(|&b| show_bool(b)).collect::<Vec<_>>().join(" ");
    w.leaf("ClassEnabled", &bools(&p.class_enabled));
    w.leaf("ClassItemsets", &bools(&p.class_itemsets));
    w.leaf("ItemsetsInSelection", show_bool(p.itemsets_in_selection));
    w.leaf("ItemsetsInSimulation", show_bool(p.itemsets_in_simulation));
    w.leaf("ProgressiveWidening", show_bool(p.progressive_widening));
    w.leaf("FirstFeatureScoring", show_bool(p.first_feature));
    w.leaf("FeaturesInSelection", show_bool(p.features_in_selection));
    w.close("Parameters");
}

fn seven<T: Copy>(n: Node<'_, '_>, v: Vec<T>) -> Result<[T; 7]> {
    v.try_into()
        .map_err(|_| KnowledgeError::Invalid(format!("<{}> needs 7 entries", name(n))))
}

/// Parameters missing from the file keep their defaults.
fn read_parameters(n: Node<'_, '_>) -> Result<Parameters> {
    let mut p = Parameters::default();
    for c in elements(n) {
        match name(c) {
            "MaxKnowledgeSize" => p.max_knowledge_size = number(c)?,
            "BaseValue" => p.base_value = number(c)?,
            "ClassWeights" => p.class_weights = seven(c, numbers(c)?)?,
            "LearningFactor" => p.learning_factor = number(c)?,
            "WinningWeight" => p.winning_weight = number(c)?,
            "LoosingWeight" => p.losing_weight = number(c)?,
            "SelectionImpact" => p.selection_impact = number(c)?,
            "SimulationImpact" => p.simulation_impact = number(c)?,
            "WideningC" => p.widening_c = number(c)?,
            "WideningAlpha" => p.widening_alpha = number(c)?,
            "ClassEnabled" | "ClassItemsets" => {
                let v = text(c)
                    .split_whitespace()
                    .map(|w| xml::parse_bool(w).ok_or_else(|| KnowledgeError::Invalid(format!("boolean {w:?}"))))
                    .collect::<Result<Vec<bool>>>()?;
                let v = seven(c, v)?;
                if name(c) == "ClassEnabled" {
                    p.class_enabled = v;
                } else {
                    p.class_itemsets = v;
                }
            }
            "ItemsetsInSelection" => p.itemsets_in_selection = boolean(c)?,
            "ItemsetsInSimulation" => p.itemsets_in_simulation = boolean(c)?,
            "ProgressiveWidening" => p.progressive_widening = boolean(c)?,
            "FirstFeatureScoring" => p.first_feature = boolean(c)?,
            "FeaturesInSelection" => p.features_in_selection = boolean(c)?,
            other => return Err(KnowledgeError::UnknownElement(other.to_string())),
        }
    }
    Ok(p)
}

fn write_metafact(w: &mut XmlWriter, m: &MetaFact) {
    match m {
        MetaFact::AnyPieceInField { position } => {
            w.open("MetafactAnyPieceInField", &[]);
            w.leaf("Position", &join(position));
            w.close("MetafactAnyPieceInField");
        }
        MetaFact::PieceInArea { area_size, area, piece } => {
            w.open("MetafactPieceInArea", &[]);
            w.leaf("AreaSize", &area_size.to_string());
            w.leaf("AreaDimensions", &join(area));
            w.leaf("Piece", piece);
            w.close("MetafactPieceInArea");
        }
    }
}

fn write_feature(w: &mut XmlWriter, f: &Feature) {
    let tag = f.kind.class().element();
    let attrs = [("weight", f.weight.to_string())];
    if matches!(f.kind, FeatureKind::ItemsetsOnly) && f.itemsets.is_empty() {
        w.empty(tag, &attrs);
        return;
    }
    w.open(tag, &attrs);
    match &f.kind {
        FeatureKind::Proximity { distance } => w.leaf("Distance", &distance.to_string()),
        FeatureKind::BorderDist { distance, lower, dimension } => {
            w.leaf("Distance", &distance.to_string());
            w.leaf("Lower", show_bool(*lower));
            w.leaf("Dimension", &dimension.to_string());
        }
        FeatureKind::AbsMove { piece, position } => {
            w.leaf("Piece", piece);
            w.leaf("Position", &join(position));
        }
        FeatureKind::AbsMoveInArea { area_size, area, piece } => {
            w.leaf("AreaSize", &area_size.to_string());
            w.leaf("AreaDimensions", &join(area));
            w.leaf("Piece", piece);
        }
        FeatureKind::KNearest { k, pieces } => {
            w.leaf("K", &k.to_string());
            w.leaf("Pieces", &pieces.join(" "));
        }
        FeatureKind::KNearest1D { k, dimension, pieces } => {
            w.leaf("K", &k.to_string());
            w.leaf("Dimension", &dimension.to_string());
            w.leaf("Pieces", &pieces.join(" "));
        }
        FeatureKind::ItemsetsOnly => {}
    }
    for set in &f.itemsets {
        w.open("Itemset", &[]);
        for m in set {
            write_metafact(w, m);
        }
        w.close("Itemset");
    }
    w.close(tag);
}

fn read_metafact(n: Node<'_, '_>) -> Result<MetaFact> {
    match name(n) {
        "MetafactAnyPieceInField" => Ok(MetaFact::AnyPieceInField {
            position: coords(&numbers(child(n, "Position")?)?),
        }),
        "MetafactPieceInArea" => Ok(MetaFact::PieceInArea {
            area_size: number(child(n, "AreaSize")?)?,
            area: numbers(child(n, "AreaDimensions")?)?,
            piece: text(child(n, "Piece")?).to_string(),
        }),
        other => Err(KnowledgeError::UnknownElement(other.to_string())),
    }
}

fn param_tags(c: FeatureClass) -> &'static [&'static str] {
    match c {
        FeatureClass::Proximity => &["Distance"],
        FeatureClass::BorderDist => &["Distance", "Lower", "Dimension"],
        FeatureClass::AbsMove => &["Piece", "Position"],
        FeatureClass::AbsMoveInArea => &["AreaSize", "AreaDimensions", "Piece"],
        FeatureClass::KNearest => &["K", "Pieces"],
        FeatureClass::KNearest1D => &["K", "Dimension", "Pieces"],
        FeatureClass::ItemsetsOnly => &[],
    }
}

fn read_feature(n: Node<'_, '_>) -> Result<Feature> {
    let class = FeatureClass::from_element(name(n))
        .ok_or_else(|| KnowledgeError::UnknownElement(name(n).to_string()))?;
    let weight: f64 = n
        .attribute("weight")
        .ok_or_else(|| KnowledgeError::MissingWeight(name(n).to_string()))?
        .trim()
        .parse()
        .map_err(|_| KnowledgeError::BadNumber {
            element: name(n).to_string(),
            text: n.attribute("weight").unwrap_or("").to_string(),
        })?;
    if !weight.is_finite() {
        return Err(KnowledgeError::Invalid(format!("weight {weight}")));
    }
    let pieces = |c: Node<'_, '_>| text(c).split_whitespace().map(str::to_string).collect::<Vec<_>>();
    let kind = match class {
        FeatureClass::Proximity => FeatureKind::Proximity { distance: number(child(n, "Distance")?)? },
        FeatureClass::BorderDist => FeatureKind::BorderDist {
            distance: number(child(n, "Distance")?)?,
            lower: boolean(child(n, "Lower")?)?,
            dimension: number(child(n, "Dimension")?)?,
        },
        FeatureClass::AbsMove => FeatureKind::AbsMove {
            piece: text(child(n, "Piece")?).to_string(),
            position: coords(&numbers(child(n, "Position")?)?),
        },
        FeatureClass::AbsMoveInArea => FeatureKind::AbsMoveInArea {
            area_size: number(child(n, "AreaSize")?)?,
            area: numbers(child(n, "AreaDimensions")?)?,
            piece: text(child(n, "Piece")?).to_string(),
        },
        FeatureClass::KNearest => FeatureKind::KNearest {
            k: number(child(n, "K")?)?,
            pieces: pieces(child(n, "Pieces")?),
        },
        FeatureClass::KNearest1D => FeatureKind::KNearest1D {
            k: number(child(n, "K")?)?,
            dimension: number(child(n, "Dimension")?)?,
            pieces: pieces(child(n, "Pieces")?),
        },
        FeatureClass::ItemsetsOnly => FeatureKind::ItemsetsOnly,
    };
    match &kind {
        FeatureKind::KNearest { k, pieces } | FeatureKind::KNearest1D { k, pieces, .. }
            if *k == 0 || pieces.len() != *k =>
        {
            return Err(KnowledgeError::Invalid(format!("K={k} with {} pieces", pieces.len())));
        }
        FeatureKind::BorderDist { dimension: 0, .. } | FeatureKind::KNearest1D { dimension: 0, .. } => {
            return Err(KnowledgeError::Invalid("dimension 0".into()));
        }
        _ => {}
    }
    let mut itemsets: Vec<Itemset> = Vec::new();
    for c in elements(n) {
        match name(c) {
            "Itemset" => {
                let mut set = elements(c).map(read_metafact).collect::<Result<Itemset>>()?;
                set.sort();
                set.dedup();
                itemsets.push(set);
            }
            t if param_tags(class).contains(&t) => {}
            other => return Err(KnowledgeError::UnknownElement(other.to_string())),
        }
    }
    Ok(Feature { kind, weight, itemsets })
}
