//! JSON shape of a constraint: `{"group", "variant", "params"}` with
//! params keyed alphabetically.

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use super::{Anchor, CaseRule, ConstraintSpec, Group, LengthUnit, Presence, Relation};
use crate::text::FormatKind;

#[derive(Serialize, Deserialize)]
struct Wire {
    group: Group,
    variant: String,
    #[serde(default)]
    params: Map<String, Value>,
}

fn char_value(c: char) -> Value {
    Value::String(c.to_string())
}

fn direction(r: Relation) -> &'static str {
    match r {
        Relation::MoreThan => "more-than",
        Relation::LessThan => "less-than",
    }
}

impl ConstraintSpec {
    fn to_wire(&self) -> Wire {
        let mut params = Map::new();
        match self {
            ConstraintSpec::StartWith(a) | ConstraintSpec::EndWith(a) => match a {
                Anchor::Letter(c) => {
                    params.insert("letter".into(), char_value(*c));
                }
                Anchor::Emoji(c) => {
                    params.insert("emoji".into(), char_value(*c));
                }
                Anchor::Keyword(k) => {
                    params.insert("keyword".into(), Value::String(k.clone()));
                }
                Anchor::Quotation => {}
            },
            ConstraintSpec::Format(_) => {}
            ConstraintSpec::Case(CaseRule::MinUpperRatio { percent }) => {
                params.insert("ratio".into(), Value::from(f64::from(*percent) / 100.0));
            }
            ConstraintSpec::Case(_) => {}
            ConstraintSpec::Punctuation { mark, .. } => {
                params.insert("mark".into(), char_value(*mark));
            }
            ConstraintSpec::BulletPoints { count } => {
                params.insert("count".into(), Value::from(*count));
            }
            ConstraintSpec::Length { relation, bound, .. } => {
                params.insert("bound".into(), Value::from(*bound));
                params.insert("direction".into(), Value::from(direction(*relation)));
            }
            ConstraintSpec::KeywordCount { keyword, count } => {
                params.insert("count".into(), Value::from(*count));
                params.insert("keyword".into(), Value::String(keyword.clone()));
            }
            ConstraintSpec::ForbiddenKeyword { keyword } => {
                params.insert("keyword".into(), Value::String(keyword.clone()));
            }
        }
        Wire { group: self.group(), variant: self.variant().to_string(), params }
    }

    fn from_wire(w: Wire) -> Result<Self, String> {
        let p = Params(&w.params);
        let spec = match (w.group, w.variant.as_str()) {
            (Group::StartWith | Group::EndWith, v) => {
                let anchor = match v {
                    "Letter" => Anchor::Letter(p.char("letter")?),
                    "Emoji" => Anchor::Emoji(p.char("emoji")?),
                    "Keyword" => Anchor::Keyword(p.string("keyword")?),
                    "Quotation" => Anchor::Quotation,
                    _ => return Err(unknown(&w)),
                };
                if w.group == Group::StartWith {
                    ConstraintSpec::StartWith(anchor)
                } else {
                    ConstraintSpec::EndWith(anchor)
                }
            }
            (Group::Format, v) => ConstraintSpec::Format(FormatKind::from_name(v).ok_or_else(|| unknown(&w))?),
            (Group::Case, "AllUpper") => ConstraintSpec::Case(CaseRule::AllUpper),
            (Group::Case, "AllLower") => ConstraintSpec::Case(CaseRule::AllLower),
            (Group::Case, "MinUpperRatio") => {
                let ratio = p.float("ratio")?;
                let scaled = ratio * 100.0;
                let percent = scaled.round();
                if (scaled - percent).abs() > 1e-9 || !(1.0..=100.0).contains(&percent) {
                    return Err(format!("ratio {ratio} is not a whole percentage in (0, 1]"));
                }
                ConstraintSpec::Case(CaseRule::MinUpperRatio { percent: percent as u8 })
            }
            (Group::Punctuation, v) => {
                let presence = match v {
                    "MustInclude" => Presence::MustInclude,
                    "MustNotInclude" => Presence::MustNotInclude,
                    _ => return Err(unknown(&w)),
                };
                ConstraintSpec::Punctuation { presence, mark: p.char("mark")? }
            }
            (Group::CountableItems, "BulletPoints") => ConstraintSpec::BulletPoints { count: p.count("count")? },
            (Group::Length, v) => {
                let unit = LengthUnit::ALL
                    .into_iter()
                    .find(|u| u.name() == v)
                    .ok_or_else(|| unknown(&w))?;
                let relation = match p.string("direction")?.as_str() {
                    "more-than" => Relation::MoreThan,
                    "less-than" => Relation::LessThan,
                    other => return Err(format!("unknown direction {other:?}")),
                };
                ConstraintSpec::Length { unit, relation, bound: p.count("bound")? }
            }
            (Group::KeywordExistence, "MustContainExact") => ConstraintSpec::KeywordCount {
                keyword: p.string("keyword")?,
                count: p.count("count")?,
            },
            (Group::KeywordForbidden, "MustNotContain") => {
                ConstraintSpec::ForbiddenKeyword { keyword: p.string("keyword")? }
            }
            _ => return Err(unknown(&w)),
        };
        spec.validate().map_err(|e| e.to_string())?;
        Ok(spec)
    }
}

fn unknown(w: &Wire) -> String {
    format!("unknown variant {}.{}", w.group, w.variant)
}

struct Params<'a>(&'a Map<String, Value>);

impl Params<'_> {
    fn get(&self, key: &str) -> Result<&Value, String> {
        self.0.get(key).ok_or_else(|| format!("missing param {key:?}"))
    }

    fn string(&self, key: &str) -> Result<String, String> {
        self.get(key)?
            .as_str()
            .map(str::to_string)
            .ok_or_else(|| format!("param {key:?} must be a string"))
    }

    fn char(&self, key: &str) -> Result<char, String> {
        let s = self.string(key)?;
        let mut it = s.chars();
        match (it.next(), it.next()) {
            (Some(c), None) => Ok(c),
            _ => Err(format!("param {key:?} must be a single character")),
        }
    }

    fn count(&self, key: &str) -> Result<u32, String> {
        self.get(key)?
            .as_u64()
            .and_then(|n| u32::try_from(n).ok())
            .ok_or_else(|| format!("param {key:?} must be a non-negative integer"))
    }

    fn float(&self, key: &str) -> Result<f64, String> {
        self.get(key)?
            .as_f64()
            .ok_or_else(|| format!("param {key:?} must be a number"))
    }
}

impl Serialize for ConstraintSpec {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        self.to_wire().serialize(s)
    }
}

impl<'de> Deserialize<'de> for ConstraintSpec {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let w = Wire::deserialize(d)?;
        ConstraintSpec::from_wire(w).map_err(serde::de::Error::custom)
    }
}
