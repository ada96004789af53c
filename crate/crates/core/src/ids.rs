//! Identifier newtypes shared across the simulation.

use core::fmt;

macro_rules! id_type {
    ($(#[$doc:meta])* $name:ident) => {
        $(#[$doc])*
        #[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
        pub struct $name(pub u32);

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                write!(f, "{}", self.0)
            }
        }

        impl From<u32> for $name {
            fn from(v: u32) -> Self {
                Self(v)
            }
        }
    };
}

id_type!(
    /// One access technology (e.g. a WiMAX-class or Wi-Fi-class network).
    TechnologyId
);
id_type!(
    /// A network attachment point: access node with one wireless and one
    /// wired interface.
    NapId
);
id_type!(
    /// A multimode mobile terminal.
    TerminalId
);
id_type!(
    /// One CBR flow, served to exactly one terminal.
    FlowId
);
id_type!(
    /// A network operator.
    ProviderId
);
