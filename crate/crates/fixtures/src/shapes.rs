//! Generators for variable values. Each generator has a default category;
//! a catalog slot may override it.

use rand::seq::IndexedRandom;
use rand::{Rng, RngExt};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Category {
    /// Object ID
    Oid,
    /// Location indicator
    Loi,
    /// Object name
    Obn,
    /// Type indicator
    Tid,
    /// Switch indicator
    Sid,
    /// Time or duration
    Tda,
    /// Computing resource
    Crs,
    /// Object amount
    Oba,
    /// Status code
    Stc,
    /// Other parameter
    Otp,
}

impl Category {
    pub const ALL: [Category; 10] = [
        Category::Oid,
        Category::Loi,
        Category::Obn,
        Category::Tid,
        Category::Sid,
        Category::Tda,
        Category::Crs,
        Category::Oba,
        Category::Stc,
        Category::Otp,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Category::Oid => "[OID]",
            Category::Loi => "[LOI]",
            Category::Obn => "[OBN]",
            Category::Tid => "[TID]",
            Category::Sid => "[SID]",
            Category::Tda => "[TDA]",
            Category::Crs => "[CRS]",
            Category::Oba => "[OBA]",
            Category::Stc => "[STC]",
            Category::Otp => "[OTP]",
        }
    }

    pub fn from_code(code: &str) -> Option<Category> {
        Category::ALL
            .into_iter()
            .find(|c| c.label().trim_matches(['[', ']']) == code)
    }
}

const USERS: &[&str] = &[
    "root",
    "admin",
    "test",
    "guest",
    "oracle",
    "user",
    "ftpuser",
    "hdfs",
    "yarn",
    "spark",
    "postgres",
    "nagios",
    "ubuntu",
    "pi",
    "git",
    "support",
    "mysql",
    "webmaster",
];
const HOSTS: &[&str] = &[
    "proxy.cse.cuhk.edu.hk",
    "www.google.com",
    "mail.example.org",
    "cdn.jsdelivr.net",
    "api.github.com",
    "login.live.com",
    "update.microsoft.com",
    "s3.amazonaws.com",
    "ocsp.digicert.com",
    "clients4.google.com",
    "news.ycombinator.com",
    "static.xx.fbcdn.net",
];
const NODES: &[&str] = &[
    "cn142",
    "cn52",
    "dn228",
    "bn711",
    "an917",
    "tbird-admin1",
    "tbird-sm1",
    "ln12",
];
const SERVICES: &[&str] = &[
    "sshd",
    "crond",
    "syslogd",
    "klogd",
    "irqbalance",
    "portmap",
    "nfslock",
    "xinetd",
    "cups",
    "sendmail",
    "httpd",
    "ntpd",
    "gpm",
];
const PACKAGES: &[&str] = &[
    "com.android.systemui",
    "com.tencent.mm",
    "com.android.phone",
    "com.huawei.health",
    "com.google.android.gms",
    "android.process.media",
    "com.android.settings",
];
const CLASSES: &[&str] = &[
    "NSMutableData",
    "WebContentFilter",
    "AppDelegate",
    "BroadcastQueue",
    "PowerManagerService",
    "AlarmManager",
    "DataNode",
    "NameNode",
    "TaskTracker",
];
const ACTIONS: &[&str] = &[
    "android.intent.action.SCREEN_ON",
    "android.intent.action.SCREEN_OFF",
    "android.intent.action.TIME_TICK",
    "android.intent.action.BATTERY_CHANGED",
    "android.intent.action.USER_PRESENT",
];
const STATES: &[&str] = &["Sleep", "Wake", "Idle", "Active", "Standby"];
const PROTOCOLS: &[&str] = &[
    "TCP", "UDP", "HTTP", "HTTPS", "ICMP", "IPv4", "IPv6", "SCTP",
];
const SWITCHES: &[&str] = &["true", "false", "on", "off", "enabled", "disabled"];
const MONTHS: &[&str] = &[
    "Jan", "Feb", "Mar", "Apr", "May", "Jun", "Jul", "Aug", "Sep", "Oct", "Nov", "Dec",
];
const DAYS: &[&str] = &["Mon", "Tue", "Wed", "Thu", "Fri", "Sat", "Sun"];
const WORDS: &[&str] = &[
    "alpha", "beta", "gamma", "delta", "omega", "sigma", "kappa", "lambda",
];

fn pick<'a, R: Rng + ?Sized>(rng: &mut R, items: &[&'a str]) -> &'a str {
    items.choose(rng).expect("non-empty list")
}

fn hex<R: Rng + ?Sized>(rng: &mut R, digits: usize) -> String {
    (0..digits)
        .map(|_| char::from_digit(rng.random_range(0..16), 16).expect("hex digit"))
        .collect()
}

fn ip<R: Rng + ?Sized>(rng: &mut R) -> String {
    format!(
        "10.{}.{}.{}",
        rng.random_range(0..256),
        rng.random_range(0..256),
        rng.random_range(1..255)
    )
}

fn clock<R: Rng + ?Sized>(rng: &mut R) -> String {
    format!(
        "{:02}:{:02}:{:02}",
        rng.random_range(0..24),
        rng.random_range(0..60),
        rng.random_range(0..60)
    )
}

/// Default category of generator `name`, or `None` if it is unknown.
pub fn default_category(name: &str) -> Option<Category> {
    use Category::*;
    Some(match name {
        "blk" | "hexid" | "hex" | "uuid" | "pid" | "appattempt" | "attempt" | "task" | "jvm"
        | "rdd" | "sessid" | "mac" | "lockid" => Oid,
        "ip" | "ipport" | "port" | "host" | "path" | "url" | "node" => Loi,
        "user" | "svc" | "pkg" | "cls" | "action" | "word" | "dotted" => Obn,
        "state" | "proto" => Tid,
        "bool" => Sid,
        "date" | "clock" | "ms" | "dur" | "ts" | "duration" => Tda,
        "size" | "kb" | "mb" | "pct" | "core" => Crs,
        "num" | "small" => Oba,
        "code" | "ecode" => Stc,
        "float" | "ver" => Otp,
        _ => return None,
    })
}

/// Draws a value for generator `name`. Values never contain a newline;
/// `date` and `dur` may contain spaces.
pub fn generate<R: Rng + ?Sized>(name: &str, rng: &mut R) -> String {
    match name {
        "blk" => {
            let sign = if rng.random::<bool>() { "-" } else { "" };
            format!(
                "blk_{sign}{}",
                rng.random_range(1_000_000_000_000_000u64..9_000_000_000_000_000)
            )
        }
        "hexid" => format!("0x{}", hex(rng, 14)),
        "hex" => format!("0x{}", hex(rng, 8)),
        "lockid" => format!("{}", rng.random_range(100_000_000u64..999_999_999)),
        "uuid" => format!(
            "{}-{}-{}-{}-{}",
            hex(rng, 8),
            hex(rng, 4),
            hex(rng, 4),
            hex(rng, 4),
            hex(rng, 12)
        ),
        "pid" => rng.random_range(100..32768).to_string(),
        "appattempt" => format!(
            "appattempt_1445144423722_{:04}_{:06}",
            rng.random_range(1..30),
            rng.random_range(1..3)
        ),
        "attempt" => format!(
            "attempt_1445144423722_{:04}_m_{:06}_{}",
            rng.random_range(1..30),
            rng.random_range(0..20),
            rng.random_range(0..3)
        ),
        "task" => format!(
            "task_1445144423722_{:04}_m_{:06}",
            rng.random_range(1..30),
            rng.random_range(0..20)
        ),
        "jvm" => format!(
            "jvm_1445144423722_{:04}_m_{:012}",
            rng.random_range(1..30),
            rng.random_range(1..40)
        ),
        "rdd" => format!(
            "rdd_{}_{}",
            rng.random_range(0..50),
            rng.random_range(0..40)
        ),
        "sessid" => format!(
            "{}_{}",
            rng.random_range(30_000_000u64..31_000_000),
            rng.random_range(1000..9999)
        ),
        "mac" => (0..6).map(|_| hex(rng, 2)).collect::<Vec<_>>().join(":"),
        "ip" => ip(rng),
        "ipport" => format!("{}:{}", ip(rng), rng.random_range(1024..65535)),
        "port" => rng.random_range(1024..65535).to_string(),
        "host" => pick(rng, HOSTS).to_string(),
        "node" => pick(rng, NODES).to_string(),
        "path" => {
            let depth = rng.random_range(1..4);
            let mut p = String::new();
            for _ in 0..depth {
                p.push('/');
                p.push_str(pick(
                    rng,
                    &[
                        "user", "var", "tmp", "etc", "root", "data", "logs", "opt", "lib",
                    ],
                ));
            }
            format!(
                "{p}/{}{}.{}",
                pick(rng, WORDS),
                rng.random_range(0..100),
                pick(rng, &["log", "dat", "jar", "xml", "tmp"])
            )
        }
        "url" => format!(
            "http://{}/{}/{}",
            pick(rng, HOSTS),
            pick(rng, WORDS),
            rng.random_range(0..1000)
        ),
        "user" => pick(rng, USERS).to_string(),
        "svc" => pick(rng, SERVICES).to_string(),
        "pkg" => pick(rng, PACKAGES).to_string(),
        "cls" => pick(rng, CLASSES).to_string(),
        "action" => pick(rng, ACTIONS).to_string(),
        "word" => pick(rng, WORDS).to_string(),
        "dotted" => format!(
            "org.{}.{}{}",
            pick(rng, WORDS),
            pick(
                rng,
                &["Worker", "Handler", "Server", "Client", "Manager", "Queue"]
            ),
            rng.random_range(1..20)
        ),
        "state" => pick(rng, STATES).to_string(),
        "proto" => pick(rng, PROTOCOLS).to_string(),
        "bool" => pick(rng, SWITCHES).to_string(),
        "date" => format!(
            "{} {} {} {} {}",
            pick(rng, DAYS),
            pick(rng, MONTHS),
            rng.random_range(1..29),
            clock(rng),
            rng.random_range(2005..2018)
        ),
        "clock" => clock(rng),
        "ms" => format!("{}ms", rng.random_range(1..5000)),
        "duration" => format!("{}s", rng.random_range(1..600)),
        "dur" => {
            if rng.random_range(0..4) == 0 {
                "<1 sec".to_string()
            } else {
                format!(
                    "{:02}:{:02}",
                    rng.random_range(0..60),
                    rng.random_range(0..60)
                )
            }
        }
        "ts" => rng
            .random_range(1_500_000_000_000u64..1_510_000_000_000)
            .to_string(),
        "size" => rng.random_range(1..70_000_000).to_string(),
        "kb" => format!("{:.1}", rng.random_range(1..50_000) as f64 / 10.0),
        "mb" => format!("{}MB", 64 * rng.random_range(1..64)),
        "pct" => format!("{}%", rng.random_range(0..101)),
        "core" => rng.random_range(1..65).to_string(),
        "num" => rng.random_range(0..10_000).to_string(),
        "small" => rng.random_range(0..10).to_string(),
        "code" => pick(
            rng,
            &["200", "201", "204", "400", "403", "404", "500", "502"],
        )
        .to_string(),
        "ecode" => format!("{}{}", pick(rng, &["E", "W"]), rng.random_range(100..1000)),
        "float" => format!("{:.2}", rng.random::<f64>() * 100.0),
        "ver" => format!(
            "v{}.{}.{}",
            rng.random_range(0..10),
            rng.random_range(0..20),
            rng.random_range(0..100)
        ),
        other => panic!("unknown generator {other}"),
    }
}
