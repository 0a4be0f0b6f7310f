// End-to-end golden paths against a real sandbox backend: one server for the
// whole file, driven through the rendered DOM exactly as a person would use
// it. The tests run in order and share the story state below (the admin
// fulfilment test ships the order the shopper test paid for).

import { afterAll, afterEach, beforeAll, describe, expect, it } from "vitest";
import { Api, ApiError } from "../src/api.js";
import { App, createApp } from "../src/app.js";
import { formatCents } from "../src/money.js";
import {
  $, click, freshRoot, LiveServer, maybe, setValue, sleep, startServer, text, until,
} from "./helpers.js";

let server: LiveServer;
let app: App;

const story = {
  shopperEmail: `shopper-${Date.now()}@golden.test`,
  shopperPassword: "golden-pass-123",
  paidOrderId: "",
};

const GOOD_PAN = "4242424242424242";
const DECLINED_PAN = "4000000000000002";

beforeAll(async () => {
  server = await startServer();
});

afterAll(() => {
  server.stop();
});

afterEach(() => {
  app?.stop();
});

async function boot(): Promise<void> {
  const root = freshRoot();
  app = createApp(root, server.base);
  await app.init();
}

function direct(token?: string | null): Api {
  const api = new Api(server.base);
  if (token) api.token = token;
  return api;
}

// last code shown in the rendered outbox panel for this address
function panelCodeFor(email: string): string | null {
  const codes = Array.from(document.querySelectorAll('[data-testid^="outbox-code-"]'));
  const mine = codes.filter((c) =>
    (c.parentElement?.textContent ?? "").startsWith(`${email}:`));
  return mine.length ? mine[mine.length - 1].textContent : null;
}

// last code delivered to this address, read straight off the diagnostics route
async function latestCode(email: string): Promise<string> {
  const { entries } = await direct().devOutbox();
  const mine = entries.filter((e) => e.email === email);
  expect(mine.length).toBeGreaterThan(0);
  return mine[mine.length - 1].code;
}

async function uiLogin(email: string, password: string): Promise<void> {
  setValue("login-email", email);
  setValue("login-password", password);
  click("login-submit");
  await until(() => maybe("otp-hint") !== null, "login challenge hint");

  // the panel snapshot predates the challenge; re-render until the code shows
  let code: string | null = null;
  for (let i = 0; i < 40 && !code; i++) {
    await app.render();
    code = panelCodeFor(email);
    if (!code) await sleep(100);
  }
  if (!code) throw new Error(`no outbox code rendered for ${email}`);

  setValue("otp-code", code);
  click("otp-submit");
  await until(() => maybe("product-grid") !== null && text("whoami") === email,
    "storefront after sign-in");
}

async function buyToPayScreen(productName: string, qty: number): Promise<string> {
  const { products } = await direct().products();
  const product = products.find((p) => p.name === productName);
  expect(product).toBeDefined();

  app.navigate(`product/${product!.id}`);
  await until(() => maybe("qty-input") !== null, "product page");
  setValue("qty-input", String(qty));
  const had = text("cart-badge");
  click("add-to-cart");
  await until(() => text("cart-badge") !== had, "cart badge update");

  app.navigate("cart");
  await until(() => maybe("checkout-button") !== null, "cart page");
  click("checkout-button");
  await until(() => maybe("pan-input") !== null, "payment page");
  return app.state.route.slice("pay/".length);
}

async function requestPaymentCode(email: string): Promise<string> {
  click("request-otp");
  await until(() => maybe("pay-otp-hint") !== null, "payment code hint");
  return latestCode(email);
}

describe("shopper golden path", () => {
  it("registers, confirms a code, shops, and pays by card with a verified receipt", async () => {
    await boot();

    // weak password is rejected inline, in words, without leaving the page
    setValue("reg-email", story.shopperEmail);
    setValue("reg-password", "short");
    click("reg-submit");
    await until(() => maybe("auth-error") !== null, "weak password rejection");
    expect(text("auth-error")).not.toMatch(/[_{]/);

    setValue("reg-email", story.shopperEmail);
    setValue("reg-password", story.shopperPassword);
    click("reg-submit");
    await until(() => maybe("registered") !== null, "registration banner");

    await uiLogin(story.shopperEmail, story.shopperPassword);
    expect(localStorage.length).toBe(0);
    expect(sessionStorage.length).toBe(0);

    // catalog shows seeded goods at server prices
    const { products } = await direct().products();
    const mug = products.find((p) => p.name === "Mug")!;
    const wrench = products.find((p) => p.name === "Wrench")!;
    expect(text(`product-price-${mug.id}`)).toBe(formatCents(mug.unit_price));

    // narrowing and clearing the search swaps the grid both ways
    setValue("search-box", "Travel");
    await until(() => maybe(`product-${wrench.id}`) === null, "filtered grid");
    expect(maybe(`product-${products.find((p) => p.name === "Travel Mug")!.id}`)).not.toBeNull();
    setValue("search-box", "");
    await until(() => maybe(`product-${wrench.id}`) !== null, "full grid restored");

    // two mugs into the cart; the badge and total are the server's numbers
    app.navigate(`product/${mug.id}`);
    await until(() => maybe("qty-input") !== null, "product page");
    expect(text("detail-price")).toBe(formatCents(mug.unit_price));
    setValue("qty-input", "2");
    click("add-to-cart");
    await until(() => text("cart-badge") === "2", "badge shows two items");

    const serverCart = await direct(app.api.token).cart();
    expect(serverCart.lines.reduce((n, l) => n + l.qty, 0)).toBe(2);

    app.navigate("cart");
    await until(() => maybe("cart-total") !== null, "cart page");
    expect(text("cart-total")).toBe(formatCents(serverCart.total));
    expect(text(`line-qty-${mug.id}`)).toBe("x2");

    click("checkout-button");
    await until(() => maybe("pan-input") !== null, "payment page");
    const orderId = app.state.route.slice("pay/".length);
    expect(text("pay-order-total")).toBe(formatCents(serverCart.total));
    await until(() => text("cart-badge") === "0", "cart emptied by checkout");

    const code = await requestPaymentCode(story.shopperEmail);

    // a number that fails its checksum never leaves the browser
    setValue("pan-input", "4242424242424241");
    click("pay-submit");
    await until(() => maybe("card-error") !== null, "checksum rejection");

    setValue("pan-input", GOOD_PAN);
    setValue("cvv-input", "123");
    setValue("pay-otp-code", code);
    click("pay-submit");
    await until(() => maybe("pay-approved") !== null, "approval banner", 20_000);
    expect(text("receipt-badge")).toBe("receipt verified");

    // the form wiped itself and the card number exists nowhere in the page
    expect(($("pan-input") as HTMLInputElement).value).toBe("");
    expect(($("cvv-input") as HTMLInputElement).value).toBe("");
    expect(($("pay-otp-code") as HTMLInputElement).value).toBe("");
    const inputValues = Array.from(document.querySelectorAll("input")).map((i) => i.value).join("|");
    expect(inputValues).not.toContain(GOOD_PAN);
    expect(document.documentElement.outerHTML).not.toContain(GOOD_PAN);
    expect(localStorage.length).toBe(0);
    expect(sessionStorage.length).toBe(0);

    app.navigate("orders");
    await until(() => maybe(`order-status-${orderId}`) !== null, "order history");
    expect(text(`order-status-${orderId}`)).toBe("Paid");
    expect((await direct(app.api.token).order(orderId)).status).toBe("Paid");

    // the stock figure on the page is whatever the server now says
    app.navigate(`product/${mug.id}`);
    await until(() => maybe("detail-stock") !== null, "product page again");
    const after = await direct().product(mug.id);
    expect(text("detail-stock")).toBe(`${after.stock} in stock`);
    expect(after.stock).toBe(mug.stock - 2);

    story.paidOrderId = orderId;
  }, 60_000);
});

describe("admin golden path", () => {
  it("creates a product, curates visibility, and ships the paid order", async () => {
    await boot();
    await uiLogin("admin@demo.test", "demo-admin-pass-1");

    app.navigate("admin/products");
    await until(() => maybe("admin-product-table") !== null, "product table");

    const select = $("ap-category") as HTMLSelectElement;
    const stationery = Array.from(select.options).find((o) => o.textContent === "Stationery");
    expect(stationery).toBeDefined();
    select.value = stationery!.value;
    setValue("ap-name", "Espresso Cups");
    setValue("ap-price", "999");
    setValue("ap-stock", "12");
    click("ap-create");
    await until(() => $("admin-product-table").textContent!.includes("Espresso Cups"),
      "new product row");

    const admin = direct(app.api.token);
    const created = (await admin.adminProducts()).products.find((p) => p.name === "Espresso Cups");
    expect(created).toBeDefined();
    expect(created!.unit_price).toBe(999);
    expect($(`ap-row-${created!.id}`).textContent).toContain(formatCents(999));

    // the storefront picks it up immediately
    app.navigate("catalog");
    await until(() => maybe(`product-${created!.id}`) !== null, "storefront shows new product");
    expect(text(`product-price-${created!.id}`)).toBe("$9.99");

    // deactivating hides it from shoppers; reactivating brings it back
    app.navigate("admin/products");
    await until(() => maybe(`ap-toggle-${created!.id}`) !== null, "product table again");
    click(`ap-toggle-${created!.id}`);
    await until(() => ($(`ap-row-${created!.id}`).textContent ?? "").includes("hidden"),
      "row marked hidden");
    app.navigate("catalog");
    await until(() => maybe(`product-${created!.id}`) === null, "storefront hides it");
    app.navigate("admin/products");
    await until(() => maybe(`ap-toggle-${created!.id}`) !== null, "product table once more");
    click(`ap-toggle-${created!.id}`);
    await until(() => ($(`ap-row-${created!.id}`).textContent ?? "").includes("active"),
      "row active again");

    // fulfilment walks the order forward one legal step at a time
    const orderId = story.paidOrderId;
    expect(orderId).not.toBe("");
    app.navigate("admin/orders");
    await until(() => maybe(`ao-row-${orderId}`) !== null, "order row");
    expect(text(`ao-status-${orderId}`)).toBe("Paid");

    const advance = () => $(`ao-advance-${orderId}`) as HTMLButtonElement;
    expect(advance().disabled).toBe(false);
    expect(advance().textContent).toBe("Mark Shipped");
    click(`ao-advance-${orderId}`);
    await until(() => text(`ao-status-${orderId}`) === "Shipped", "order shipped");
    expect(advance().textContent).toBe("Mark Delivered");
    click(`ao-advance-${orderId}`);
    await until(() => text(`ao-status-${orderId}`) === "Delivered", "order delivered");
    expect(advance().disabled).toBe(true);
    expect(advance().textContent).toBe("No action");

    // the UI refuses to offer illegal jumps; forging one directly is refused too
    const err = await admin.adminOrderStatus(orderId, "Paid").catch((e) => e as ApiError);
    expect(err).toBeInstanceOf(ApiError);
    expect((err as ApiError).status).toBe(409);
    expect((err as ApiError).code).toBe("illegal_transition");
    expect((err as ApiError).requestId).not.toBe("");
  }, 60_000);
});

describe("security golden path", () => {
  it("locks a hammered account and shows exactly the server's incident report", async () => {
    await boot();

    const victim = `victim-${Date.now()}@golden.test`;
    await direct().register(victim, "victim-pass-123");

    // five bad passwords, each one rejected in plain words
    const rejection = () => maybe("auth-error") ?? maybe("lockout-banner");
    for (let i = 0; i < 5; i++) {
      const before = rejection();
      setValue("login-email", victim);
      setValue("login-password", `wrong-pass-${i}`);
      click("login-submit");
      await until(() => {
        const banner = rejection();
        return banner !== null && banner !== before;
      }, `rejection ${i + 1}`);
      expect(rejection()!.textContent).not.toMatch(/[_{]/);
    }

    // now even the real password bounces off the lock
    const beforeLock = maybe("lockout-banner");
    setValue("login-email", victim);
    setValue("login-password", "victim-pass-123");
    click("login-submit");
    await until(() => {
      const banner = maybe("lockout-banner");
      return banner !== null && banner !== beforeLock;
    }, "lockout banner");
    expect(text("lockout-banner")).toContain("temporarily locked");
    expect(text("lockout-banner")).not.toMatch(/[_{]/);

    // a shopper token is not enough for the incident report
    const shopper = direct();
    const login = await shopper.login("shopper@demo.test", "demo-shopper-pass-1");
    expect(login.otp_required).toBe(true);
    const session = await shopper.verifyOtp(login.challenge_id!,
      await latestCode("shopper@demo.test"));
    shopper.token = session.token;
    const denied = await shopper.securityReport().catch((e) => e as ApiError);
    expect(denied).toBeInstanceOf(ApiError);
    expect((denied as ApiError).status).toBe(403);

    // the panel shows the report verbatim
    await uiLogin("admin@demo.test", "demo-admin-pass-1");
    app.navigate("admin/security");
    await until(() => maybe("security-panel") !== null, "security panel");

    const report = await direct(app.api.token).securityReport();
    expect(Number(text("sec-attempts"))).toBe(report.unauthorized_attempts);
    expect(Number(text("sec-breaches"))).toBe(report.successful_breaches);
    expect(Number(text("sec-lockouts"))).toBe(report.lockouts);
    expect(report.lockouts).toBeGreaterThanOrEqual(1);

    const rows = Array.from(document.querySelectorAll('[data-testid="sec-lockout-row"]'));
    expect(rows.length).toBe(report.recent_lockouts.length);
    expect(rows.some((r) => (r.textContent ?? "").includes(victim))).toBe(true);
  }, 60_000);
});

describe("payment outcomes", () => {
  it("explains a decline in words and approves a retry as a fresh attempt", async () => {
    await boot();
    await uiLogin("shopper@demo.test", "demo-shopper-pass-1");
    const orderId = await buyToPayScreen("Wrench", 1);

    const code = await requestPaymentCode("shopper@demo.test");
    setValue("pan-input", DECLINED_PAN);
    setValue("cvv-input", "999");
    setValue("pay-otp-code", code);
    click("pay-submit");
    await until(() => maybe("decline-reason") !== null, "decline banner", 20_000);
    expect(text("decline-reason")).toBe("insufficient funds");
    expect(($("pan-input") as HTMLInputElement).value).toBe("");
    expect((await direct(app.api.token).order(orderId)).status).toBe("AwaitingPayment");

    // a new confirmation code and a good card succeed on the same order
    const retryCode = await requestPaymentCode("shopper@demo.test");
    setValue("pan-input", GOOD_PAN);
    setValue("cvv-input", "123");
    setValue("pay-otp-code", retryCode);
    click("pay-submit");
    await until(() => maybe("pay-approved") !== null, "approval after retry", 20_000);
    expect(text("receipt-badge")).toBe("receipt verified");
    expect((await direct(app.api.token).order(orderId)).status).toBe("Paid");
  }, 60_000);

  it("pays with a wallet token end to end", async () => {
    await boot();
    await uiLogin("shopper@demo.test", "demo-shopper-pass-1");
    const orderId = await buyToPayScreen("Notebook", 1);

    const code = await requestPaymentCode("shopper@demo.test");
    setValue("pay-otp-code", code);
    click("wallet-pay");
    await until(() => maybe("pay-approved") !== null, "wallet approval", 20_000);
    expect(text("receipt-badge")).toBe("receipt verified");
    expect((await direct(app.api.token).order(orderId)).status).toBe("Paid");
  }, 60_000);
});

describe("session surface", () => {
  it("signs in federated without a code, routes by hash, and signs out clean", async () => {
    await boot();
    click("federated-button");
    await until(() => maybe("product-grid") !== null
      && text("whoami") === "federated@demo.test", "federated session");

    // deep links go through the address bar
    location.hash = "#/orders";
    await until(() => maybe("orders-view") !== null, "orders via hash change");

    click("logout");
    await until(() => maybe("login-submit") !== null && text("whoami") === "guest",
      "back to sign-in");
    expect(app.api.token).toBeNull();
    expect(localStorage.length).toBe(0);
    expect(sessionStorage.length).toBe(0);
  }, 60_000);
});
