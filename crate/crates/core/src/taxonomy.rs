//! Canonical label sets for the three evaluation tasks and normalization of
//! free-text model output onto them.
//!
//! Attack categories form a closed nine-member set; entity types are open:
//! the eight built-in types can be extended through an alias table loaded at
//! startup. All lookups go through folded surface forms, so `"Bombing or
//! Explosion"`, `"bombing/explosion"`, and `"Bombing-Explosion"` all resolve
//! to the same category.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Number of canonical attack categories.
pub const ATTACK_TYPE_COUNT: usize = 9;

/// The nine canonical attack categories, in ordinal order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum AttackType {
    Assassination,
    ArmedAssault,
    BombingExplosion,
    Hijacking,
    HostageBarricade,
    HostageKidnapping,
    FacilityInfrastructureAttack,
    UnarmedAssault,
    Unknown,
}

impl AttackType {
    pub const ALL: [AttackType; ATTACK_TYPE_COUNT] = [
        AttackType::Assassination,
        AttackType::ArmedAssault,
        AttackType::BombingExplosion,
        AttackType::Hijacking,
        AttackType::HostageBarricade,
        AttackType::HostageKidnapping,
        AttackType::FacilityInfrastructureAttack,
        AttackType::UnarmedAssault,
        AttackType::Unknown,
    ];

    /// Index in `0..9`; a bijection onto the canonical ordering.
    pub fn ordinal(self) -> usize {
        self as usize
    }

    pub fn from_ordinal(ordinal: usize) -> Option<AttackType> {
        Self::ALL.get(ordinal).copied()
    }

    /// Canonical display string, as used in prompts and reports.
    pub fn display_name(self) -> &'static str {
        match self {
            AttackType::Assassination => "Assassination",
            AttackType::ArmedAssault => "Armed Assault",
            AttackType::BombingExplosion => "Bombing/Explosion",
            AttackType::Hijacking => "Hijacking",
            AttackType::HostageBarricade => "Hostage Taking (Barricade Incident)",
            AttackType::HostageKidnapping => "Hostage Taking (Kidnapping)",
            AttackType::FacilityInfrastructureAttack => "Facility/Infrastructure Attack",
            AttackType::UnarmedAssault => "Unarmed Assault",
            AttackType::Unknown => "Unknown",
        }
    }

    /// Filesystem-safe identifier derived from the display string.
    pub fn slug(self) -> &'static str {
        match self {
            AttackType::Assassination => "assassination",
            AttackType::ArmedAssault => "armed-assault",
            AttackType::BombingExplosion => "bombing-explosion",
            AttackType::Hijacking => "hijacking",
            AttackType::HostageBarricade => "hostage-barricade",
            AttackType::HostageKidnapping => "hostage-kidnapping",
            AttackType::FacilityInfrastructureAttack => "facility-infrastructure-attack",
            AttackType::UnarmedAssault => "unarmed-assault",
            AttackType::Unknown => "unknown",
        }
    }
}

impl fmt::Display for AttackType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.display_name())
    }
}

impl Serialize for AttackType {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(self.display_name())
    }
}

/// Binary relevance label: conflict-related (1) or not (0).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BinaryLabel {
    NonConflict,
    Conflict,
}

impl BinaryLabel {
    pub fn as_u8(self) -> u8 {
        match self {
            BinaryLabel::NonConflict => 0,
            BinaryLabel::Conflict => 1,
        }
    }

    pub fn from_u8(value: u8) -> Option<BinaryLabel> {
        match value {
            0 => Some(BinaryLabel::NonConflict),
            1 => Some(BinaryLabel::Conflict),
            _ => None,
        }
    }
}

/// Entity categories for the NER task. The eight built-in types cover the
/// role and general inventories used by the corpora here; further types can
/// be registered through the alias table.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum EntityType {
    Person,
    Organisation,
    Location,
    Temporal,
    PerpetratorOrganization,
    PerpetratorIndividual,
    Victim,
    PhysicalTarget,
    Extension(Arc<str>),
}

impl EntityType {
    pub const BUILTIN: [EntityType; 8] = [
        EntityType::Person,
        EntityType::Organisation,
        EntityType::Location,
        EntityType::Temporal,
        EntityType::PerpetratorOrganization,
        EntityType::PerpetratorIndividual,
        EntityType::Victim,
        EntityType::PhysicalTarget,
    ];

    /// Canonical name, also used as the `X` in `B-X`/`I-X` tags.
    pub fn name(&self) -> &str {
        match self {
            EntityType::Organisation => "Organisation",
            EntityType::Person => "Person",
            EntityType::Location => "Location",
            EntityType::Temporal => "Temporal",
            EntityType::PerpetratorOrganization => "PerpetratorOrganization",
            EntityType::PerpetratorIndividual => "PerpetratorIndividual",
            EntityType::Victim => "Victim",
            EntityType::PhysicalTarget => "PhysicalTarget",
            EntityType::Extension(name) => name,
        }
    }

    fn builtin_ordinal(&self) -> Option<usize> {
        Self::BUILTIN.iter().position(|t| t == self)
    }
}

impl fmt::Display for EntityType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl Serialize for EntityType {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(self.name())
    }
}

/// Set of attack categories, stored as a nine-bit mask.
#[derive(Clone, Copy, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct AttackSet(u16);

impl AttackSet {
    pub const EMPTY: AttackSet = AttackSet(0);

    pub fn insert(&mut self, t: AttackType) {
        self.0 |= 1 << t.ordinal();
    }

    pub fn contains(self, t: AttackType) -> bool {
        self.0 & (1 << t.ordinal()) != 0
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn iter(self) -> impl Iterator<Item = AttackType> {
        AttackType::ALL
            .into_iter()
            .filter(move |t| self.contains(*t))
    }

    /// Number of categories on which the two sets disagree.
    pub fn symmetric_difference_len(self, other: AttackSet) -> usize {
        (self.0 ^ other.0).count_ones() as usize
    }

    pub fn intersects(self, other: AttackSet) -> bool {
        self.0 & other.0 != 0
    }
}

impl FromIterator<AttackType> for AttackSet {
    fn from_iter<I: IntoIterator<Item = AttackType>>(iter: I) -> Self {
        let mut set = AttackSet::EMPTY;
        for t in iter {
            set.insert(t);
        }
        set
    }
}

impl fmt::Debug for AttackSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.iter()).finish()
    }
}

/// Probabilities over the nine attack categories, indexed by ordinal.
/// Entries are independent; the vector need not sum to 1.
#[derive(Clone, Debug, PartialEq)]
pub struct CategoryVector {
    probs: [f64; ATTACK_TYPE_COUNT],
}

impl CategoryVector {
    pub fn zero() -> CategoryVector {
        CategoryVector {
            probs: [0.0; ATTACK_TYPE_COUNT],
        }
    }

    pub fn get(&self, t: AttackType) -> f64 {
        self.probs[t.ordinal()]
    }

    pub fn set(&mut self, t: AttackType, prob: f64) {
        self.probs[t.ordinal()] = prob;
    }

    pub fn probs(&self) -> &[f64; ATTACK_TYPE_COUNT] {
        &self.probs
    }

    /// Categories whose probability reaches `tau`.
    pub fn threshold(&self, tau: f64) -> AttackSet {
        AttackType::ALL
            .into_iter()
            .filter(|t| self.probs[t.ordinal()] >= tau)
            .collect()
    }

    pub fn is_zero(&self) -> bool {
        self.probs.iter().all(|p| *p == 0.0)
    }

    pub fn positive_count(&self) -> usize {
        self.probs.iter().filter(|p| **p > 0.0).count()
    }
}

/// All-zero probability vector in canonical ordinal order.
pub fn attack_vector_template() -> CategoryVector {
    CategoryVector::zero()
}

#[derive(Debug, Error)]
pub enum TaxonomyError {
    #[error("unknown label `{0}`")]
    UnknownLabel(String),
    #[error("alias `{surface}` maps to both `{first}` and `{second}`")]
    DuplicateAlias {
        surface: String,
        first: String,
        second: String,
    },
    #[error("malformed alias table: {0}")]
    Malformed(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Fold a surface label for alias lookup: lowercase, treat `/`, `-`, `_`
/// and the word "or" as separators, and collapse whitespace. Parenthesized
/// qualifiers are kept; mismatches on those need explicit aliases.
pub fn fold_label(raw: &str) -> String {
    let lowered = raw.to_lowercase();
    let spaced: String = lowered
        .chars()
        .map(|c| if matches!(c, '/' | '-' | '_') { ' ' } else { c })
        .collect();
    spaced
        .split_whitespace()
        .filter(|tok| *tok != "or")
        .collect::<Vec<_>>()
        .join(" ")
}

#[derive(Deserialize)]
struct AliasFile {
    #[serde(default)]
    attack: BTreeMap<String, String>,
    #[serde(default)]
    entity: BTreeMap<String, String>,
}

/// Alias tables for both label sets plus the registered entity extensions.
/// Immutable after load; shared read access is safe.
#[derive(Clone, Debug)]
pub struct Taxonomy {
    attack_aliases: BTreeMap<String, AttackType>,
    entity_aliases: BTreeMap<String, EntityType>,
    extensions: Vec<Arc<str>>,
}

impl Default for Taxonomy {
    fn default() -> Self {
        Taxonomy::builtin()
    }
}

impl Taxonomy {
    /// The default tables shipped in the binary: every canonical display
    /// string maps to itself, plus the common variants seen in model output
    /// and CoNLL-style corpora.
    pub fn builtin() -> Taxonomy {
        let mut tax = Taxonomy {
            attack_aliases: BTreeMap::new(),
            entity_aliases: BTreeMap::new(),
            extensions: Vec::new(),
        };
        for t in AttackType::ALL {
            tax.add_attack_alias(t.display_name(), t)
                .expect("builtin attack aliases are collision-free");
        }
        // Variants observed in generative output. "Other" is not one of the
        // nine categories; it is treated as Unknown.
        for (surface, target) in [
            ("Kidnapping", AttackType::HostageKidnapping),
            ("Hostage Taking Kidnapping", AttackType::HostageKidnapping),
            ("Barricade Incident", AttackType::HostageBarricade),
            (
                "Hostage Taking Barricade Incident",
                AttackType::HostageBarricade,
            ),
            ("Other", AttackType::Unknown),
        ] {
            tax.add_attack_alias(surface, target)
                .expect("builtin attack aliases are collision-free");
        }
        for t in EntityType::BUILTIN {
            tax.add_entity_alias(t.name(), t.clone())
                .expect("builtin entity aliases are collision-free");
        }
        for (surface, target) in [
            ("ORG", EntityType::Organisation),
            ("Organization", EntityType::Organisation),
            ("PER", EntityType::Person),
            ("LOC", EntityType::Location),
            ("GPE", EntityType::Location),
            ("DATE", EntityType::Temporal),
            ("TIME", EntityType::Temporal),
            (
                "Perpetrator Organization",
                EntityType::PerpetratorOrganization,
            ),
            ("Perpetrator Individual", EntityType::PerpetratorIndividual),
            ("Physical Target", EntityType::PhysicalTarget),
        ] {
            tax.add_entity_alias(surface, target)
                .expect("builtin entity aliases are collision-free");
        }
        tax
    }

    /// Built-in tables extended with a `{"attack": {...}, "entity": {...}}`
    /// alias file. An entity alias whose target names none of the built-in
    /// types registers that target as a new extension type.
    pub fn with_alias_file(path: &Path) -> Result<Taxonomy, TaxonomyError> {
        let mut tax = Taxonomy::builtin();
        let text = std::fs::read_to_string(path)?;
        tax.extend_from_json(&text)?;
        Ok(tax)
    }

    pub fn extend_from_json(&mut self, json: &str) -> Result<(), TaxonomyError> {
        let file: AliasFile =
            serde_json::from_str(json).map_err(|e| TaxonomyError::Malformed(e.to_string()))?;
        for (surface, target) in &file.attack {
            let canonical = self
                .attack_aliases
                .get(&fold_label(target))
                .copied()
                .ok_or_else(|| TaxonomyError::UnknownLabel(target.clone()))?;
            self.add_attack_alias(surface, canonical)?;
        }
        for (surface, target) in &file.entity {
            let canonical = match self.entity_aliases.get(&fold_label(target)) {
                Some(t) => t.clone(),
                None => self.register_extension(target),
            };
            self.add_entity_alias(surface, canonical)?;
        }
        Ok(())
    }

    fn register_extension(&mut self, name: &str) -> EntityType {
        let arc: Arc<str> = Arc::from(name);
        if !self.extensions.contains(&arc) {
            self.extensions.push(arc.clone());
            self.extensions.sort();
        }
        let t = EntityType::Extension(arc);
        // The extension's own name must resolve to itself.
        let folded = fold_label(name);
        self.entity_aliases
            .entry(folded)
            .or_insert_with(|| t.clone());
        t
    }

    fn add_attack_alias(&mut self, surface: &str, target: AttackType) -> Result<(), TaxonomyError> {
        let folded = fold_label(surface);
        if folded.is_empty() {
            return Err(TaxonomyError::Malformed(format!(
                "alias surface `{surface}` folds to the empty string"
            )));
        }
        match self.attack_aliases.get(&folded) {
            Some(existing) if *existing != target => Err(TaxonomyError::DuplicateAlias {
                surface: surface.to_string(),
                first: existing.display_name().to_string(),
                second: target.display_name().to_string(),
            }),
            _ => {
                self.attack_aliases.insert(folded, target);
                Ok(())
            }
        }
    }

    fn add_entity_alias(&mut self, surface: &str, target: EntityType) -> Result<(), TaxonomyError> {
        let folded = fold_label(surface);
        if folded.is_empty() {
            return Err(TaxonomyError::Malformed(format!(
                "alias surface `{surface}` folds to the empty string"
            )));
        }
        match self.entity_aliases.get(&folded) {
            Some(existing) if *existing != target => Err(TaxonomyError::DuplicateAlias {
                surface: surface.to_string(),
                first: existing.name().to_string(),
                second: target.name().to_string(),
            }),
            _ => {
                self.entity_aliases.insert(folded, target);
                Ok(())
            }
        }
    }

    /// Canonical attack category for a raw label. Matching is exact on the
    /// folded form, never fuzzy.
    pub fn normalize_attack_label(&self, raw: &str) -> Result<AttackType, TaxonomyError> {
        self.attack_aliases
            .get(&fold_label(raw))
            .copied()
            .ok_or_else(|| TaxonomyError::UnknownLabel(raw.trim().to_string()))
    }

    /// Canonical entity type for a raw label.
    pub fn normalize_entity_label(&self, raw: &str) -> Result<EntityType, TaxonomyError> {
        self.entity_aliases
            .get(&fold_label(raw))
            .cloned()
            .ok_or_else(|| TaxonomyError::UnknownLabel(raw.trim().to_string()))
    }

    /// Stable ordering index: built-ins first, then extensions sorted by name.
    pub fn entity_ordinal(&self, t: &EntityType) -> usize {
        match t.builtin_ordinal() {
            Some(i) => i,
            None => {
                let name = t.name();
                EntityType::BUILTIN.len()
                    + self
                        .extensions
                        .iter()
                        .position(|e| e.as_ref() == name)
                        .unwrap_or(self.extensions.len())
            }
        }
    }

    /// All known entity types: the built-ins plus registered extensions.
    pub fn entity_types(&self) -> Vec<EntityType> {
        let mut types: Vec<EntityType> = EntityType::BUILTIN.to_vec();
        types.extend(
            self.extensions
                .iter()
                .map(|e| EntityType::Extension(e.clone())),
        );
        types
    }
}
