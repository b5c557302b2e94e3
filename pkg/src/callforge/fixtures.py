"""Synthetic Arabic tool-calling fixtures.

Nothing here reproduces a released corpus. The inventory, queries and
predictions are generated so that every pipeline stage has realistic input:
36 raw tools that prune to 27, five dialects, eight domains, optional enum
parameters that are sometimes null, enum variants that need normalization,
and simulated model outputs covering every error class.
"""

from __future__ import annotations

import random
from typing import Any, Sequence

from .chat_serializer import SerializerConfig, render_call
from .schema_core import DIALECTS, ParameterSpec, Sample, ToolCall, ToolSchema

DOMAINS = (
    "weather",
    "travel",
    "banking",
    "utilities",
    "islamic_services",
    "government_services",
    "healthcare",
    "e_commerce",
)

_DIALECT_PREFIX = {
    "MSA": ["أريد أن أعرف", "من فضلك", "هل يمكنك"],
    "Egyptian": ["عايز أعرف", "لو سمحت", "ممكن"],
    "Gulf": ["أبي أعرف", "لو سمحت", "تقدر"],
    "Levantine": ["بدي أعرف", "من فضلك", "فيك"],
    "Maghrebi": ["بغيت نعرف", "عافاك", "واش تقدر"],
}

_NEGATIVE_QUERIES = [
    "كيف حالك اليوم؟",
    "احكي لي نكتة قصيرة",
    "ما رأيك في الشعر العربي القديم؟",
    "شكراً على مساعدتك",
    "من هو مؤلف كتاب الأيام؟",
    "اكتب لي بيتاً من الشعر عن البحر",
    "ما معنى كلمة سراب؟",
    "صباح الخير",
]

CITIES = ["الرياض", "جدة", "دبي", "القاهرة", "عمّان", "الدار البيضاء", "بيروت", "الدوحة", "مكة المكرمة", "تونس"]

# Strings that stress the escape delimiter: braces, quotes, backslashes, newlines.
TRICKY_STRINGS = [
    'قال "مرحبا" ثم غادر',
    "{ليس كائناً}",
    "}{",
    "\\ مسار\\ملف",
    "سطر أول\nسطر ثانٍ",
    '"',
    '{"key": [1, 2]}',
    "  مسافات في الطرفين  ",
    "رمز تعبيري 🚀",
    "<not a control token>",
    "end_function_call",
    "a,b:c",
    "",
]


def _p(name: str, value_type: str, en: str, ar: str, required: bool = False, enum: Sequence[str] | None = None) -> ParameterSpec:
    return ParameterSpec(name, value_type, f"{en}. {ar}.", tuple(enum) if enum else None, required)


def _tool(name: str, en: str, ar: str, params: Sequence[ParameterSpec]) -> ToolSchema:
    guidance = (
        "Call this tool only when the user request clearly matches its purpose and all required "
        "arguments can be extracted from the message or the conversation context. "
        "لا تستدعِ هذه الأداة إلا إذا كان طلب المستخدم يطابق غرضها بوضوح وأمكن استخراج جميع الوسائط المطلوبة من الرسالة"
    )
    return ToolSchema(name, f"{en}. {ar}. {guidance}.", tuple(params))


def _city(required: bool = True) -> ParameterSpec:
    return _p("city", "string", "Name of the city, written in Arabic or English", "اسم المدينة المطلوبة بالعربية أو الإنجليزية", required)


_UNIT = ("celsius", "fahrenheit")
_CURRENCIES = ("SAR", "AED", "EGP", "JOD", "MAD", "USD", "EUR")

TOOL_DOMAINS: dict[str, str] = {}


def _build_core() -> list[ToolSchema]:
    spec: list[tuple[str, ToolSchema]] = [
        ("weather", _tool("get_weather", "Get the current weather conditions for a city", "احصل على حالة الطقس الحالية في مدينة معينة", [
            _city(), _p("unit", "string", "Temperature unit for the response", "وحدة درجة الحرارة", enum=_UNIT)])),
        ("weather", _tool("get_forecast", "Get a multi-day weather forecast for a city", "احصل على توقعات الطقس لعدة أيام", [
            _city(), _p("days", "integer", "Number of days to forecast, between one and fourteen", "عدد أيام التوقعات", True),
            _p("unit", "string", "Temperature unit for the forecast", "وحدة درجة الحرارة في التوقعات", enum=_UNIT)])),
        ("weather", _tool("get_air_quality", "Get the air quality index and dominant pollutant for a city", "احصل على مؤشر جودة الهواء في مدينة", [
            _city(), _p("pollutant", "string", "Specific pollutant to report", "الملوث المطلوب", enum=("pm25", "pm10", "o3", "no2"))])),
        ("travel", _tool("search_flights", "Search for available flights between two cities on a date", "ابحث عن رحلات طيران متاحة بين مدينتين", [
            _p("origin", "string", "Departure city", "مدينة المغادرة", True),
            _p("destination", "string", "Arrival city", "مدينة الوصول", True),
            _p("date", "string", "Travel date in ISO format YYYY-MM-DD", "تاريخ السفر", True),
            _p("passengers", "integer", "Number of passengers travelling", "عدد المسافرين"),
            _p("cabin_class", "string", "Cabin class for the booking", "درجة المقصورة", enum=("economy", "business", "first"))])),
        ("travel", _tool("book_hotel", "Book a hotel room in a city", "احجز غرفة فندقية في مدينة", [
            _city(), _p("check_in", "string", "Check-in date in ISO format", "تاريخ الوصول", True),
            _p("nights", "integer", "Number of nights to stay", "عدد الليالي", True),
            _p("room_type", "string", "Type of room requested", "نوع الغرفة", enum=("single", "double", "suite")),
            _p("amenities", "array", "List of requested amenities", "قائمة المرافق المطلوبة")])),
        ("travel", _tool("track_flight", "Track the live status of a flight by its number", "تتبع حالة رحلة طيران برقمها", [
            _p("flight_number", "string", "Airline flight number such as SV123", "رقم الرحلة", True)])),
        ("travel", _tool("find_restaurants", "Find restaurants in a city, optionally by cuisine", "ابحث عن مطاعم في مدينة", [
            _city(), _p("cuisine", "string", "Preferred cuisine", "نوع المطبخ", enum=("arabic", "indian", "italian", "seafood")),
            _p("open_now", "boolean", "Only return restaurants that are open now", "المطاعم المفتوحة الآن فقط")])),
        ("banking", _tool("convert_currency", "Convert an amount of money from one currency to another", "حوّل مبلغاً من عملة إلى أخرى", [
            _p("amount", "number", "Amount of money to convert", "المبلغ المراد تحويله", True),
            _p("from_currency", "string", "ISO code of the source currency", "رمز العملة المصدر", True),
            _p("to_currency", "string", "ISO code of the target currency", "رمز العملة الهدف", True)])),
        ("banking", _tool("transfer_money", "Transfer money to another bank account", "حوّل أموالاً إلى حساب بنكي آخر", [
            _p("amount", "number", "Amount to transfer", "المبلغ المراد تحويله", True),
            _p("to_account", "string", "Destination account number or IBAN", "رقم الحساب المستلم", True),
            _p("currency", "string", "Currency of the transfer", "عملة التحويل", enum=_CURRENCIES)])),
        ("banking", _tool("check_balance", "Check the balance of the user's bank account", "اعرض رصيد الحساب البنكي", [
            _p("account_type", "string", "Which account to check", "نوع الحساب", enum=("checking", "savings"))])),
        ("banking", _tool("get_exchange_rate", "Get the current exchange rate between two currencies", "احصل على سعر الصرف الحالي بين عملتين", [
            _p("base", "string", "Base currency code", "العملة الأساسية", True),
            _p("quote", "string", "Quote currency code", "العملة المقابلة", True)])),
        ("utilities", _tool("pay_bill", "Pay a utility bill for an account", "ادفع فاتورة خدمات لحساب معين", [
            _p("bill_type", "string", "Kind of bill to pay", "نوع الفاتورة", True, ("electricity", "water", "gas", "internet")),
            _p("account_number", "string", "Utility account number", "رقم حساب الخدمة", True)])),
        ("utilities", _tool("check_outage", "Check for service outages in a city", "تحقق من وجود انقطاع في الخدمات في مدينة", [
            _city(), _p("service", "string", "Service to check", "الخدمة المطلوبة", enum=("electricity", "water", "internet"))])),
        ("utilities", _tool("top_up_mobile", "Top up a prepaid mobile line", "اشحن رصيد خط جوال مسبق الدفع", [
            _p("phone_number", "string", "Mobile number to top up", "رقم الجوال", True),
            _p("amount", "number", "Top-up amount", "مبلغ الشحن", True)])),
        ("utilities", _tool("get_current_time", "Get the current local time, optionally in a time zone", "احصل على الوقت المحلي الحالي", [
            _p("timezone", "string", "IANA time zone name such as Asia/Riyadh", "المنطقة الزمنية")])),
        ("islamic_services", _tool("get_prayer_times", "Get prayer times for a city on a date", "احصل على مواقيت الصلاة لمدينة", [
            _city(), _p("date", "string", "Date in ISO format; today if omitted", "التاريخ"),
            _p("prayer", "string", "Single prayer to report", "الصلاة المطلوبة", enum=("fajr", "dhuhr", "asr", "maghrib", "isha"))])),
        ("islamic_services", _tool("get_qibla_direction", "Get the qibla bearing from a location", "احصل على اتجاه القبلة من موقع", [
            _p("latitude", "number", "Latitude in decimal degrees", "خط العرض", True),
            _p("longitude", "number", "Longitude in decimal degrees", "خط الطول", True)])),
        ("islamic_services", _tool("calculate_zakat", "Calculate zakat due on savings", "احسب الزكاة المستحقة على المدخرات", [
            _p("wealth", "number", "Total zakatable wealth", "إجمالي المال الخاضع للزكاة", True),
            _p("currency", "string", "Currency of the amount", "العملة", enum=_CURRENCIES)])),
        ("islamic_services", _tool("get_hijri_date", "Convert a Gregorian date to the Hijri calendar", "حوّل تاريخاً ميلادياً إلى هجري", [
            _p("gregorian_date", "string", "Gregorian date in ISO format", "التاريخ الميلادي")])),
        ("government_services", _tool("check_visa_status", "Check the status of a visa application", "تحقق من حالة طلب التأشيرة", [
            _p("application_number", "string", "Visa application reference number", "رقم طلب التأشيرة", True)])),
        ("government_services", _tool("renew_residency", "Renew a residency permit", "جدّد تصريح الإقامة", [
            _p("iqama_number", "string", "Residency permit number", "رقم الإقامة", True),
            _p("duration_years", "integer", "Renewal duration in years", "مدة التجديد بالسنوات", True)])),
        ("government_services", _tool("book_government_appointment", "Book an appointment at a government office", "احجز موعداً في جهة حكومية", [
            _p("service", "string", "Government service", "الخدمة الحكومية", True, ("passport", "civil_id", "driving_license")),
            _city()])),
        ("healthcare", _tool("book_medical_appointment", "Book a doctor appointment", "احجز موعداً مع طبيب", [
            _p("specialty", "string", "Medical specialty", "التخصص الطبي", True, ("general", "dentistry", "pediatrics", "cardiology")),
            _city(), _p("date", "string", "Preferred date in ISO format", "التاريخ المفضل", True)])),
        ("healthcare", _tool("find_pharmacy", "Find pharmacies near a city centre", "ابحث عن صيدليات قريبة", [
            _city(), _p("open_now", "boolean", "Only pharmacies open now", "الصيدليات المفتوحة الآن فقط")])),
        ("healthcare", _tool("check_insurance_coverage", "Check whether a procedure is covered by an insurance policy", "تحقق من تغطية التأمين لإجراء طبي", [
            _p("policy_number", "string", "Insurance policy number", "رقم وثيقة التأمين", True),
            _p("procedure", "string", "Medical procedure name", "اسم الإجراء الطبي", True)])),
        ("e_commerce", _tool("track_order", "Track an online order by its identifier", "تتبع طلب شراء عبر الإنترنت", [
            _p("order_id", "string", "Order identifier", "رقم الطلب", True)])),
        ("e_commerce", _tool("search_products", "Search an online catalogue", "ابحث في متجر إلكتروني", [
            _p("query", "string", "Search terms", "كلمات البحث", True),
            _p("category", "string", "Product category", "فئة المنتج", enum=("electronics", "clothing", "groceries", "books")),
            _p("max_price", "number", "Maximum price", "السعر الأقصى"),
            _p("filters", "object", "Additional attribute filters", "مرشحات إضافية")])),
    ]
    for domain, tool in spec:
        TOOL_DOMAINS[tool.name] = domain
    return [tool for _, tool in spec]


CORE_TOOLS: list[ToolSchema] = _build_core()


def _clone(tool: ToolSchema, name: str) -> ToolSchema:
    return ToolSchema(name, tool.description, tool.parameters)


def _noise() -> list[ToolSchema]:
    core = {t.name: t for t in CORE_TOOLS}
    tools = [
        _clone(core["get_weather"], "get_weather_v2"),
        _clone(core["convert_currency"], "currency_convert"),
        _clone(core["get_current_time"], "get_time_now"),
        _tool("send_sms_raw", "Send a raw SMS payload", "أرسل رسالة نصية خام", [
            _p("payload", "string", "Raw payload", "الحمولة", True)]),
        _tool("generic_search", "Search anything", "ابحث عن أي شيء", [
            _p("q", "string", "Free text", "نص حر", True), _p("limit", "integer", "Max results", "الحد الأقصى")]),
        _tool("debug_echo", "Echo the input back", "أعد النص كما هو", [
            _p("text", "string", "Text to echo", "النص", True), _p("repeat", "integer", "Repetitions", "عدد التكرار", True)]),
        _tool("translate_text_legacy", "Translate text between languages", "ترجم نصاً بين لغتين", [
            _p("text", "string", "Text to translate", "النص", True), _p("target_lang", "string", "Target language", "اللغة الهدف", True)]),
        _tool("get_news_headlines", "Get news headlines", "احصل على عناوين الأخبار", [
            _p("topic", "string", "News topic", "الموضوع", enum=("sports", "politics", "economy"))]),
        _tool("unit_converter_beta", "Convert between measurement units", "حوّل بين وحدات القياس", [
            _p("value", "number", "Value", "القيمة", True), _p("from_unit", "string", "Source unit", "الوحدة المصدر", True),
            _p("to_unit", "string", "Target unit", "الوحدة الهدف", True), _p("precision", "integer", "Digits", "عدد الخانات")]),
    ]
    domains = {
        "get_weather_v2": "weather",
        "currency_convert": "banking",
        "get_time_now": "utilities",
        "send_sms_raw": "utilities",
        "generic_search": "e_commerce",
        "debug_echo": "utilities",
        "translate_text_legacy": "travel",
        "get_news_headlines": "e_commerce",
        "unit_converter_beta": "utilities",
    }
    TOOL_DOMAINS.update(domains)
    return tools


NOISE_TOOLS: list[ToolSchema] = _noise()


def raw_inventory() -> list[ToolSchema]:
    """The 36-tool inventory before pruning."""
    return list(CORE_TOOLS) + list(NOISE_TOOLS)


def pruned_inventory() -> list[ToolSchema]:
    """The 27 tools that survive :func:`default_prune_plan`."""
    return list(CORE_TOOLS)


def default_prune_plan() -> dict[str, Any]:
    return {
        "remove": [
            "get_weather_v2",
            "send_sms_raw",
            "generic_search",
            "debug_echo",
            "translate_text_legacy",
            "get_news_headlines",
            "unit_converter_beta",
        ],
        "merge": {
            "currency_convert": {"target": "convert_currency"},
            "get_time_now": {"target": "get_current_time", "param_renames": {}},
        },
    }


def default_normalization_map() -> dict[str, Any]:
    unit = {"سيلزيوس": "celsius", "مئوية": "celsius", "Celsius": "celsius", "C": "celsius",
            "فهرنهايت": "fahrenheit", "Fahrenheit": "fahrenheit", "F": "fahrenheit"}
    return {
        "get_weather": {"unit": dict(unit)},
        "get_forecast": {"unit": dict(unit)},
        "search_flights": {"cabin_class": {"اقتصادية": "economy", "Economy": "economy", "رجال أعمال": "business", "أولى": "first"}},
        "get_prayer_times": {"prayer": {"الفجر": "fajr", "الظهر": "dhuhr", "العصر": "asr", "المغرب": "maghrib", "العشاء": "isha", "Fajr": "fajr"}},
        "pay_bill": {"bill_type": {"كهرباء": "electricity", "ماء": "water", "غاز": "gas", "إنترنت": "internet"}},
    }


VARIANTS = {
    (tool, param): list(variants)
    for tool, params in default_normalization_map().items()
    for param, variants in params.items()
}


def _string_value(tool: str, param: str, rng: random.Random, tricky: bool) -> str:
    if tricky and param not in ("date", "check_in", "gregorian_date") and rng.random() < 0.5:
        return rng.choice(TRICKY_STRINGS)
    if param in ("city", "origin", "destination"):
        return rng.choice(CITIES)
    if param in ("date", "check_in", "gregorian_date"):
        return f"2025-{rng.randint(1, 12):02d}-{rng.randint(1, 28):02d}"
    if param in ("from_currency", "to_currency", "base", "quote"):
        return rng.choice(_CURRENCIES)
    if param == "timezone":
        return rng.choice(["Asia/Riyadh", "Asia/Dubai", "Africa/Cairo", "Africa/Casablanca"])
    if param == "flight_number":
        return f"{rng.choice(['SV', 'EK', 'MS', 'RJ', 'AT'])}{rng.randint(100, 999)}"
    if param in ("account_number", "to_account", "policy_number", "order_id", "application_number", "iqama_number"):
        return str(rng.randint(10**7, 10**8 - 1))
    if param == "phone_number":
        return f"05{rng.randint(10**7, 10**8 - 1)}"
    if param == "procedure":
        return rng.choice(["أشعة سينية", "تنظيف أسنان", "تحليل دم"])
    if param == "query":
        return rng.choice(["هاتف ذكي", "عباية", "تمر سكري", "رواية"])
    return rng.choice(["نص", "قيمة", "مثال"])


def _value(tool: ToolSchema, spec: ParameterSpec, rng: random.Random, tricky: bool) -> Any:
    if spec.enum_values is not None:
        return rng.choice(spec.enum_values)
    t = spec.value_type
    if t == "string":
        return _string_value(tool.name, spec.name, rng, tricky)
    if t == "integer":
        return rng.randint(1, 14)
    if t == "number":
        return round(rng.uniform(1, 5000), 2) if spec.name not in ("latitude", "longitude") else round(rng.uniform(-90, 90), 4)
    if t == "boolean":
        return rng.random() < 0.5
    if t == "array":
        return rng.sample(["واي فاي", "مسبح", "إفطار", 'موقف "خاص"', "{جناح}"], rng.randint(0, 3))
    if t == "object":
        return {"brand": rng.choice(["سامسونج", "أبل"]), "in_stock": rng.random() < 0.5, "rating": rng.randint(1, 5)}
    raise ValueError(t)


def make_arguments(tool: ToolSchema, rng: random.Random, null_enum: bool = False, tricky: bool = False) -> dict[str, Any]:
    """Arguments valid under the null-tolerant rule.

    With ``null_enum`` the first optional enum parameter is set to null and
    no other optional enum is null; otherwise optional enums are either
    omitted or given a canonical value, never null.
    """
    args: dict[str, Any] = {}
    nulled = False
    for spec in tool.parameters:
        if spec.required:
            args[spec.name] = _value(tool, spec, rng, tricky)
        elif spec.enum_values is not None and null_enum and not nulled:
            args[spec.name] = None
            nulled = True
        elif rng.random() < 0.6:
            args[spec.name] = _value(tool, spec, rng, tricky)
    if null_enum and not nulled:
        raise ValueError(f"tool {tool.name!r} has no optional enum parameter")
    return args


def has_optional_enum(tool: ToolSchema) -> bool:
    return any(p.enum_values is not None and not p.required for p in tool.parameters)


def make_query(tool: ToolSchema, args: dict[str, Any], dialect: str, rng: random.Random) -> str:
    prefix = rng.choice(_DIALECT_PREFIX[dialect])
    mention = " ".join(str(v) for v in args.values() if isinstance(v, (str, int, float)) and not isinstance(v, bool))
    ar = tool.description.split(". ")[1]
    return f"{prefix} {ar} {mention}".strip()


def make_reasoning(sample: Sample) -> str:
    if sample.target is None:
        return "الطلب لا يحتاج إلى أي أداة من الأدوات المعرّفة، لذا سأجيب دون استدعاء."
    keys = "، ".join(sample.target.arguments) or "بلا وسائط"
    return f"المستخدم يطلب خدمة تناسب الأداة {sample.target.tool_name}، والوسائط المستخرجة هي: {keys}."


def make_corpus(
    n: int,
    seed: int = 0,
    inventory: Sequence[ToolSchema] | None = None,
    negative_fraction: float = 0.2,
    null_enum_count: int = 0,
    dead_tools: Sequence[str] = (),
    variant_count: int = 0,
    empty_queries: int = 0,
    tricky: bool = False,
    with_reasoning: bool = False,
) -> list[dict[str, Any]]:
    """Generate ``n`` corpus rows as JSON-ready dicts.

    Exactly ``null_enum_count`` positive rows (outside ``dead_tools``) carry a
    null optional-enum argument; every row targeting a tool in ``dead_tools``
    does too, so those tools have no sample surviving the strict enum rule.
    ``variant_count`` positive rows use a non-canonical enum spelling from
    :func:`default_normalization_map`. ``empty_queries`` rows have a blank
    query.
    """
    rng = random.Random(seed)
    tools = list(inventory) if inventory is not None else pruned_inventory()
    dead = set(dead_tools)
    n_neg = round(n * negative_fraction)
    n_pos = n - n_neg
    if null_enum_count + variant_count > n_pos:
        raise ValueError("more special rows requested than positive rows")

    live = [t for t in tools if t.name not in dead]
    null_capable = [t for t in live if has_optional_enum(t)]
    variant_capable = [t for t in live if any((t.name, p.name) in VARIANTS for p in t.parameters)]
    dead_tools_list = [t for t in tools if t.name in dead]
    for t in dead_tools_list:
        if not has_optional_enum(t):
            raise ValueError(f"dead tool {t.name!r} has no optional enum parameter")

    kinds = ["null"] * null_enum_count + ["variant"] * variant_count
    kinds += ["plain"] * (n_pos - len(kinds)) + ["neg"] * n_neg
    rng.shuffle(kinds)
    empty_at = set(rng.sample(range(n), empty_queries)) if empty_queries else set()

    rows = []
    for i, kind in enumerate(kinds):
        dialect = DIALECTS[i % len(DIALECTS)] if rng.random() < 0.3 else rng.choice(DIALECTS)
        ts = f"2025-{rng.randint(1, 12):02d}-{rng.randint(1, 28):02d}T{rng.randint(0, 23):02d}:{rng.choice(['00', '15', '30', '45'])}:00+03:00"
        if kind == "neg":
            row = {
                "id": f"s{i:06d}",
                "query": rng.choice(_NEGATIVE_QUERIES),
                "dialect": dialect,
                "domain": rng.choice(DOMAINS),
                "requires_function": False,
                "target": None,
                "timestamp": ts,
            }
            if rng.random() < 0.9:
                row["response"] = "أنا بخير، كيف أستطيع مساعدتك؟"
        else:
            if kind == "null":
                tool = rng.choice(null_capable)
            elif kind == "variant":
                tool = rng.choice(variant_capable)
            elif dead_tools_list and rng.random() < 0.05:
                tool = rng.choice(dead_tools_list)
            else:
                tool = rng.choice(live)
            null = kind == "null" or tool.name in dead
            args = make_arguments(tool, rng, null_enum=null, tricky=tricky)
            if kind == "variant":
                param = next(p.name for p in tool.parameters if (tool.name, p.name) in VARIANTS)
                args[param] = rng.choice(VARIANTS[(tool.name, param)])
            row = {
                "id": f"s{i:06d}",
                "query": make_query(tool, args, dialect, rng),
                "dialect": dialect,
                "domain": TOOL_DOMAINS.get(tool.name, rng.choice(DOMAINS)),
                "requires_function": True,
                "target": {"tool_name": tool.name, "arguments": args},
                "timestamp": ts,
            }
        if i in empty_at:
            row["query"] = "   "
        if with_reasoning and row["query"].strip():
            row["reasoning"] = make_reasoning(Sample.from_dict(row))
        rows.append(row)
    return rows


def random_valid_sample(rng: random.Random, inventory: Sequence[ToolSchema], index: int, positive_fraction: float = 0.8) -> Sample:
    """One valid sample with adversarial string arguments, for round-trip checks."""
    dialect = rng.choice(DIALECTS)
    if rng.random() >= positive_fraction:
        return Sample(f"r{index:06d}", rng.choice(_NEGATIVE_QUERIES), dialect, rng.choice(DOMAINS), False)
    tool = rng.choice(list(inventory))
    null = has_optional_enum(tool) and rng.random() < 0.2
    args = make_arguments(tool, rng, null_enum=null, tricky=True)
    return Sample(
        f"r{index:06d}",
        make_query(tool, args, dialect, rng),
        dialect,
        TOOL_DOMAINS.get(tool.name, "utilities"),
        True,
        ToolCall(tool.name, args),
        timestamp="2025-03-01T10:00:00+03:00",
    )


# Simulated model behaviour: probabilities per outcome for positives.
DEFAULT_PROFILE = {
    "correct": 0.55,
    "wrong_function": 0.12,
    "unoffered": 0.08,
    "argument_drift": 0.13,
    "missed": 0.06,
    "malformed": 0.06,
}


def simulate_output(
    sample: Sample,
    inventory: Sequence[ToolSchema],
    rng: random.Random,
    config: SerializerConfig | None = None,
    profile: dict[str, float] | None = None,
    negative_call_rate: float = 0.03,
    think: bool = False,
) -> str:
    """Produce a plausible raw completion for ``sample``."""
    config = config or SerializerConfig()
    profile = profile or DEFAULT_PROFILE
    index = {t.name: t for t in inventory}
    prefix = ""
    if think:
        prefix = f"{config.think_tokens.open}\n{make_reasoning(sample)}{config.think_tokens.close}"

    if sample.target is None:
        if rng.random() < negative_call_rate:
            tool = rng.choice(list(inventory))
            return prefix + render_call(tool.name, make_arguments(tool, rng), config, tool)
        return prefix + config.no_call_text

    gold = sample.target
    outcome = rng.choices(list(profile), weights=list(profile.values()))[0]
    if outcome == "correct":
        return prefix + render_call(gold.tool_name, gold.arguments, config, index.get(gold.tool_name))
    if outcome == "wrong_function":
        others = [t for t in inventory if t.name != gold.tool_name]
        tool = rng.choice(others)
        return prefix + render_call(tool.name, make_arguments(tool, rng), config, tool)
    if outcome == "unoffered":
        return prefix + render_call("lookup_" + gold.tool_name, dict(gold.arguments), config)
    if outcome == "argument_drift":
        args = dict(gold.arguments)
        key = next((k for k, v in args.items() if isinstance(v, str)), None)
        if key is not None:
            args[key] = args[key] + " تقريباً"
        else:
            args["note"] = "تقريباً"
        return prefix + render_call(gold.tool_name, args, config, index.get(gold.tool_name))
    if outcome == "missed":
        return prefix + "سأبحث عن ذلك لاحقاً."
    text = render_call(gold.tool_name, gold.arguments, config, index.get(gold.tool_name))
    return prefix + text[: max(len(config.control_tokens.call_start) + 3, len(text) // 2)]


# Fine-tuned column of the error-distribution table, per 1,000 records.
ERROR_MIX_COUNTS = {
    "ParseFailure": 8,
    "ToolHallucination": 247,
    "WrongFunction": 236,
    "ArgumentMismatch": 202,
    "Correct": 203,
    "MissedCall": 104,
}


def _positive(rng: random.Random, inventory: Sequence[ToolSchema], i: int, prefix: str) -> Sample:
    tool = rng.choice(list(inventory))
    dialect = rng.choice(DIALECTS)
    args = make_arguments(tool, rng)
    return Sample(f"{prefix}{i:05d}", make_query(tool, args, dialect, rng), dialect, TOOL_DOMAINS[tool.name], True, ToolCall(tool.name, args))


def _negative(rng: random.Random, i: int, prefix: str) -> Sample:
    return Sample(f"{prefix}{i:05d}", rng.choice(_NEGATIVE_QUERIES), rng.choice(DIALECTS), rng.choice(DOMAINS), False)


def error_mix_fixture(seed: int = 0, counts: dict[str, int] | None = None):
    """Records built so each error class occurs exactly ``counts[class]`` times.

    Returns ``(samples, offered, outputs)`` where ``offered`` and ``outputs``
    map sample id to the offered tool names and the raw completion.
    """
    from .tool_sampler import SamplerConfig, sample_tools

    counts = counts or ERROR_MIX_COUNTS
    rng = random.Random(seed)
    tools = pruned_inventory()
    index = {t.name: t for t in tools}
    config = SerializerConfig()
    samples: list[Sample] = []
    offered: dict[str, list[str]] = {}
    outputs: dict[str, str] = {}
    scfg = SamplerConfig(k=5, seed=seed)

    def add(sample: Sample, output: str) -> None:
        subset = sample_tools(tools, sample.target.tool_name if sample.target else None, sample.requires_function, sample.id, scfg)
        samples.append(sample)
        offered[sample.id] = [t.name for t in subset]
        outputs[sample.id] = output

    def call_text(call: ToolCall) -> str:
        return render_call(call.tool_name, call.arguments, config, index.get(call.tool_name))

    i = 0
    for cls, count in counts.items():
        for j in range(count):
            i += 1
            if cls == "Correct" and j % 4 == 3:
                add(_negative(rng, i, "t"), config.no_call_text)
                continue
            if cls == "ToolHallucination" and j % 2 == 1:
                neg = _negative(rng, i, "t")
                other = rng.choice(tools)
                add(neg, call_text(ToolCall(other.name, make_arguments(other, rng))))
                continue
            s = _positive(rng, tools, i, "t")
            gold = s.target
            if cls == "ParseFailure":
                add(s, call_text(gold)[:-len(config.control_tokens.call_end)])
            elif cls == "ToolHallucination":
                add(s, call_text(ToolCall("unlisted_" + gold.tool_name, dict(gold.arguments))))
            elif cls == "MissedCall":
                add(s, "لا أعرف.")
            elif cls == "Correct":
                add(s, call_text(gold))
            elif cls == "ArgumentMismatch":
                args = dict(gold.arguments)
                key = next(iter(args), "extra")
                value = args.get(key)
                args[key] = value + " (معدّل)" if isinstance(value, str) else "قيمة مختلفة"
                add(s, call_text(ToolCall(gold.tool_name, args)))
            elif cls == "WrongFunction":
                samples_offered = sample_tools(tools, gold.tool_name, True, s.id, scfg)
                wrong = next(t for t in samples_offered if t.name != gold.tool_name)
                add(s, call_text(ToolCall(wrong.name, make_arguments(wrong, rng))))
            else:
                raise ValueError(cls)
    return samples, offered, outputs


def think_fixture(seed: int = 0, n: int = 240, missed: int = 2):
    """Reasoning-model outputs: every completion opens with a think block.

    ``n - missed`` positives get a correct call after the reasoning; the
    remaining ``missed`` positives reason and then answer without a call.
    """
    from .tool_sampler import SamplerConfig, sample_tools

    rng = random.Random(seed)
    tools = pruned_inventory()
    index = {t.name: t for t in tools}
    config = SerializerConfig()
    think = config.think_tokens
    samples: list[Sample] = []
    offered: dict[str, list[str]] = {}
    outputs: dict[str, str] = {}
    for i in range(n):
        s = _positive(rng, tools, i, "k")
        subset = sample_tools(tools, s.target.tool_name, True, s.id, SamplerConfig(k=5, seed=seed))
        head = f"{think.open}\n{make_reasoning(s)}{think.close}\n"
        if i < n - missed:
            body = render_call(s.target.tool_name, s.target.arguments, config, index[s.target.tool_name])
        else:
            body = "أحتاج إلى مزيد من التفاصيل قبل التنفيذ."
        samples.append(s)
        offered[s.id] = [t.name for t in subset]
        outputs[s.id] = head + body
    return samples, offered, outputs
