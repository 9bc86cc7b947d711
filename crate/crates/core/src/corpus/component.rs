use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use super::{CorpusError, Source};

/// Shipped raw-label to component table.
pub const COMPONENT_TABLE_TSV: &str = include_str!("../../data/component_map.tsv");

/// Kernel subsystem buckets; the seven named variants are the ones analysed individually.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Component {
    FileSystem,
    Drivers,
    Networking,
    KernelCore,
    Tools,
    Security,
    IO,
    Other(String),
}

impl Component {
    pub const NAMED: [Component; 7] = [
        Component::FileSystem,
        Component::Drivers,
        Component::Networking,
        Component::KernelCore,
        Component::Tools,
        Component::Security,
        Component::IO,
    ];

    pub fn is_named(&self) -> bool {
        !matches!(self, Component::Other(_))
    }

    pub fn display_name(&self) -> &str {
        match self {
            Component::FileSystem => "File System",
            Component::Drivers => "Drivers",
            Component::Networking => "Networking",
            Component::KernelCore => "Kernel Core",
            Component::Tools => "Tools",
            Component::Security => "Security",
            Component::IO => "IO",
            Component::Other(name) => name,
        }
    }
}

impl fmt::Display for Component {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.display_name())
    }
}

impl FromStr for Component {
    type Err = CorpusError;

    /// Parses the variant identifiers used in the mapping table (`FileSystem`, `IO`, ...).
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s.trim() {
            "FileSystem" => Component::FileSystem,
            "Drivers" => Component::Drivers,
            "Networking" => Component::Networking,
            "KernelCore" => Component::KernelCore,
            "Tools" => Component::Tools,
            "Security" => Component::Security,
            "IO" => Component::IO,
            other => {
                let name = other.strip_prefix("Other:").unwrap_or(other).trim();
                if name.is_empty() {
                    return Err(CorpusError::InvalidRecord("empty component name".into()));
                }
                Component::Other(name.to_string())
            }
        })
    }
}

/// Lowercased raw label to component lookup.
#[derive(Debug, Clone, PartialEq)]
pub struct ComponentTable {
    entries: BTreeMap<String, Component>,
}

impl ComponentTable {
    pub fn parse(text: &str) -> Result<Self, CorpusError> {
        let mut entries = BTreeMap::new();
        for (idx, line) in text.lines().enumerate() {
            let line = line.trim_end();
            if line.trim().is_empty() || line.trim_start().starts_with('#') {
                continue;
            }
            let (raw, component) = line.split_once('\t').ok_or_else(|| CorpusError::Parse {
                line: idx + 1,
                message: "expected `raw_label<TAB>component`".into(),
            })?;
            let key = raw.trim().to_lowercase();
            let component: Component = component.parse()?;
            if entries.insert(key.clone(), component).is_some() {
                return Err(CorpusError::Parse { line: idx + 1, message: format!("duplicate label `{key}`") });
            }
        }
        Ok(Self { entries })
    }

    pub fn shipped() -> &'static ComponentTable {
        static TABLE: OnceLock<ComponentTable> = OnceLock::new();
        TABLE.get_or_init(|| ComponentTable::parse(COMPONENT_TABLE_TSV).expect("shipped component table parses"))
    }

    pub fn lookup(&self, label: &str) -> Option<&Component> {
        self.entries.get(&label.trim().to_lowercase())
    }

    pub fn entries(&self) -> impl Iterator<Item = (&str, &Component)> {
        self.entries.iter().map(|(k, v)| (k.as_str(), v))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Bugzilla values may arrive as `Product/Component`; syzkaller ones as a
    /// comma or whitespace separated subsystem list. The first mapped piece wins.
    pub fn normalize(&self, component_raw: &str, source: Source) -> Component {
        let raw = component_raw.trim();
        if raw.is_empty() {
            return Component::Other("unspecified".into());
        }
        if let Some(c) = self.lookup(raw) {
            return c.clone();
        }
        let found = match source {
            Source::Bugzilla => raw.split('/').find_map(|piece| self.lookup(piece)),
            Source::Syzkaller => raw
                .split(|c: char| c == ',' || c.is_whitespace())
                .filter(|p| !p.is_empty())
                .find_map(|piece| self.lookup(piece)),
        };
        found.cloned().unwrap_or_else(|| Component::Other(raw.to_string()))
    }
}

pub fn normalize_component(component_raw: &str, source: Source) -> Component {
    ComponentTable::shipped().normalize(component_raw, source)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn direct_entries() {
        assert_eq!(normalize_component("ext4", Source::Syzkaller), Component::FileSystem);
        assert_eq!(normalize_component("Platform Drivers", Source::Bugzilla), Component::Drivers);
        assert_eq!(normalize_component("  NETWORKING ", Source::Bugzilla), Component::Networking);
    }

    #[test]
    fn virtualization_stays_outside_the_named_seven() {
        assert_eq!(normalize_component("kvm", Source::Syzkaller), Component::Other("kvm".into()));
    }

    #[test]
    fn empty_label_is_unspecified() {
        assert_eq!(normalize_component("", Source::Bugzilla), Component::Other("unspecified".into()));
        assert_eq!(normalize_component("   ", Source::Syzkaller), Component::Other("unspecified".into()));
    }

    #[test]
    fn compound_labels() {
        assert_eq!(normalize_component("Drivers/USB", Source::Bugzilla), Component::Drivers);
        assert_eq!(normalize_component("kvm, ext4", Source::Syzkaller), Component::FileSystem);
    }

    #[test]
    fn shipped_table_round_trips() {
        let table = ComponentTable::shipped();
        assert!(table.len() > 50);
        for named in Component::NAMED {
            assert!(table.entries().any(|(_, c)| *c == named), "{named} has no table entry");
        }
        for (label, component) in table.entries() {
            assert!(component.is_named());
            assert_eq!(&table.normalize(label, Source::Bugzilla), component);
            assert_eq!(&table.normalize(label, Source::Syzkaller), component);
        }
    }

    #[test]
    fn duplicate_labels_are_rejected() {
        let err = ComponentTable::parse("ext4\tFileSystem\nEXT4\tDrivers\n").unwrap_err();
        assert!(matches!(err, CorpusError::Parse { line: 2, .. }));
    }
}
