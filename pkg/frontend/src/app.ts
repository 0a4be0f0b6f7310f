// The storefront and admin dashboard: a hash-routed single-page app over the
// JSON API. Three rules hold everywhere: secrets (passwords, OTP codes, card
// digits) live only in form fields and are wiped after submission, nothing is
// ever written to persistent storage, and every number shown comes from a
// server response, never from client arithmetic.

import { Api, ApiError, Intent } from "./api.js";
import { h, clear } from "./dom.js";
import { luhnValid } from "./luhn.js";
import { formatCents } from "./money.js";
import { newClientKeyBytes, sealEnvelope, toBase64 } from "./sealing.js";

// the UI only ever offers transitions the server would accept
const NEXT_STATUS: Record<string, string> = { Paid: "Shipped", Shipped: "Delivered" };

export interface AppState {
  role: string | null;
  email: string | null;
  route: string;
  cartCount: number;
  sandbox: boolean;
  pollMs: number;
}

interface PendingOtp {
  challengeId: string;
}

export class App {
  api: Api;
  state: AppState = {
    role: null, email: null, route: "auth",
    cartCount: 0, sandbox: false, pollMs: 2000,
  };

  private root: HTMLElement;
  private loginOtp: PendingOtp | null = null;
  private clientKey: { bytes: Uint8Array; keyId: string } | null = null;
  private payAttempt = new Map<string, number>();
  private timer: ReturnType<typeof setInterval> | null = null;
  private onHashChange = () => {
    const route = location.hash.replace(/^#\//, "") || "auth";
    if (route === this.state.route) return; // navigate() already rendered this route
    this.state.route = route;
    void this.render();
  };

  constructor(root: HTMLElement, base = "") {
    this.root = root;
    this.api = new Api(base);
  }

  async init(): Promise<void> {
    const cfg = await this.api.config();
    this.state.sandbox = cfg.sandbox;
    this.state.pollMs = cfg.poll_interval_ms;
    this.state.route = location.hash.replace(/^#\//, "") || "auth";
    window.addEventListener("hashchange", this.onHashChange);
    await this.render();
  }

  start(): void {
    this.timer = setInterval(() => void this.poll(), this.state.pollMs);
  }

  stop(): void {
    if (this.timer) clearInterval(this.timer);
    this.timer = null;
    window.removeEventListener("hashchange", this.onHashChange);
  }

  navigate(route: string): void {
    this.state.route = route;
    location.hash = "#/" + route;
    void this.render();
  }

  // refresh whatever the current view shows; cheap enough to run on a timer
  async poll(): Promise<void> {
    await this.render();
  }

  private get authed(): boolean {
    return this.api.token !== null;
  }

  // -- rendering ---------------------------------------------------------------

  async render(): Promise<void> {
    const route = this.state.route;
    clear(this.root);
    this.root.append(this.header());
    const main = h("main", { id: "view" });
    this.root.append(main);

    try {
      if (!this.authed && route !== "auth") {
        this.state.route = "auth";
        main.append(await this.viewAuth());
      } else if (route === "auth") {
        main.append(this.authed ? await this.viewCatalog() : await this.viewAuth());
      } else if (route === "catalog") {
        main.append(await this.viewCatalog());
      } else if (route.startsWith("product/")) {
        main.append(await this.viewProduct(route.slice("product/".length)));
      } else if (route === "cart") {
        main.append(await this.viewCart());
      } else if (route.startsWith("pay/")) {
        main.append(await this.viewPay(route.slice("pay/".length)));
      } else if (route === "orders") {
        main.append(await this.viewOrders());
      } else if (route.startsWith("order/")) {
        main.append(await this.viewOrder(route.slice("order/".length)));
      } else if (route.startsWith("admin/")) {
        main.append(await this.viewAdmin(route));
      } else {
        main.append(await this.viewCatalog());
      }
    } catch (err) {
      main.append(this.errorBox(err, "view-error"));
    }

    // the dev outbox is how the sandbox demo reads its own OTP codes, so it
    // must be visible during login, before any session exists
    if (this.state.sandbox) {
      this.root.append(await this.outboxPanel());
    }
  }

  private header(): HTMLElement {
    const badge = h("span", { "data-testid": "cart-badge", class: "badge" },
      String(this.state.cartCount));
    return h("header", {},
      h("span", { class: "brand" }, "securemart"),
      h("nav", {},
        h("a", { href: "#/catalog", "data-testid": "nav-catalog" }, "Shop"),
        h("a", { href: "#/cart", "data-testid": "nav-cart" }, "Cart ", badge),
        h("a", { href: "#/orders", "data-testid": "nav-orders" }, "Orders"),
        this.state.role === "admin"
          ? h("a", { href: "#/admin/products", "data-testid": "nav-admin" }, "Admin")
          : null,
      ),
      this.authed
        ? h("span", {},
            h("span", { "data-testid": "whoami" }, this.state.email ?? ""),
            h("button", { "data-testid": "logout", onclick: () => void this.doLogout() },
              "Sign out"))
        : h("span", { "data-testid": "whoami" }, "guest"),
    );
  }

  private errorBox(err: unknown, testid: string): HTMLElement {
    // inline human text only; the raw envelope never reaches the page
    if (err instanceof ApiError) {
      if (err.code === "locked_out") {
        return h("div", { class: "banner error", "data-testid": "lockout-banner" },
          "Account temporarily locked after too many failed attempts. Try again later.");
      }
      return h("div", { class: "banner error", "data-testid": testid },
        humanize(err.code));
    }
    return h("div", { class: "banner error", "data-testid": testid },
      "Something went wrong. Please retry.");
  }

  private async refreshCartBadge(): Promise<void> {
    if (!this.authed) return;
    try {
      const cart = await this.api.cart();
      this.state.cartCount = cart.lines.reduce((n, l) => n + l.qty, 0);
    } catch {
      // badge is cosmetic; never block a view on it
    }
  }

  // -- auth --------------------------------------------------------------------

  private async viewAuth(): Promise<HTMLElement> {
    const box = h("section", { class: "auth" });
    const msg = h("div", { "data-testid": "auth-message" });

    const regEmail = h("input", { "data-testid": "reg-email", type: "email" }) as HTMLInputElement;
    const regPass = h("input", { "data-testid": "reg-password", type: "password" }) as HTMLInputElement;
    const logEmail = h("input", { "data-testid": "login-email", type: "email" }) as HTMLInputElement;
    const logPass = h("input", { "data-testid": "login-password", type: "password" }) as HTMLInputElement;

    const otpSection = h("div", { class: "otp", hidden: !this.loginOtp },
      h("label", {}, "One-time code"),
    );
    const otpCode = h("input", { "data-testid": "otp-code", inputmode: "numeric" }) as HTMLInputElement;
    const otpBtn = h("button", { "data-testid": "otp-submit" }, "Verify code");
    otpSection.append(otpCode, otpBtn);

    otpBtn.addEventListener("click", () => void (async () => {
      clearChildren(msg);
      const code = otpCode.value;
      try {
        if (!this.loginOtp) return;
        const session = await this.api.verifyOtp(this.loginOtp.challengeId, code);
        this.enterSession(session.token, session.role, session.email);
      } catch (err) {
        msg.append(this.errorBox(err, "otp-error"));
      } finally {
        otpCode.value = ""; // codes are single-use secrets
      }
    })());

    const doLogin = async () => {
      clearChildren(msg);
      const email = logEmail.value;
      const password = logPass.value;
      try {
        const res = await this.api.login(email, password);
        if (res.otp_required && res.challenge_id) {
          this.loginOtp = { challengeId: res.challenge_id };
          otpSection.hidden = false;
          msg.append(h("div", { class: "banner", "data-testid": "otp-hint" },
            "Enter the one-time code sent to your inbox."));
        } else if (res.token) {
          this.enterSession(res.token, res.role ?? "user", res.email ?? email);
        }
      } catch (err) {
        msg.append(this.errorBox(err, "auth-error"));
      } finally {
        logPass.value = "";
      }
    };

    const doRegister = async () => {
      clearChildren(msg);
      try {
        await this.api.register(regEmail.value, regPass.value);
        msg.append(h("div", { class: "banner ok", "data-testid": "registered" },
          "Account created. Sign in below."));
        logEmail.value = regEmail.value;
      } catch (err) {
        msg.append(this.errorBox(err, "auth-error"));
      } finally {
        regPass.value = "";
      }
    };

    box.append(
      h("h2", {}, "Create account"),
      regEmail, regPass,
      h("button", { "data-testid": "reg-submit", onclick: () => void doRegister() }, "Register"),
      h("h2", {}, "Sign in"),
      logEmail, logPass,
      h("button", { "data-testid": "login-submit", onclick: () => void doLogin() }, "Sign in"),
      otpSection,
      msg,
    );

    if (this.state.sandbox) {
      box.append(h("button", {
        "data-testid": "federated-button",
        onclick: () => void (async () => {
          clearChildren(msg);
          try {
            const assertion = await this.api.devFederatedAssertion(
              "demo-subject", "federated@demo.test");
            const session = await this.api.federated(assertion);
            this.enterSession(session.token, session.role, session.email);
          } catch (err) {
            msg.append(this.errorBox(err, "auth-error"));
          }
        })(),
      }, "Demo federated sign-in"));
    }
    return box;
  }

  private enterSession(token: string, role: string, email: string): void {
    this.api.token = token;
    this.state.role = role;
    this.state.email = email;
    this.loginOtp = null;
    void this.refreshCartBadge().then(() => this.navigate("catalog"));
  }

  private async doLogout(): Promise<void> {
    try {
      await this.api.logout();
    } catch {
      // a dead session is already logged out
    }
    this.api.token = null;
    this.state.role = null;
    this.state.email = null;
    this.state.cartCount = 0;
    this.clientKey = null;
    this.navigate("auth");
  }

  // -- storefront --------------------------------------------------------------

  private async viewCatalog(query = ""): Promise<HTMLElement> {
    const { products } = query
      ? await this.api.search(query)
      : await this.api.products();
    const box = h("section", { class: "catalog" });

    const search = h("input", {
      "data-testid": "search-box", placeholder: "Search products", value: query,
    }) as HTMLInputElement;
    search.addEventListener("change", () => void (async () => {
      const view = await this.viewCatalog(search.value);
      box.replaceWith(view);
    })());
    box.append(h("div", { class: "toolbar" }, search));

    const grid = h("div", { class: "grid", "data-testid": "product-grid" });
    for (const p of products) {
      grid.append(h("div", { class: "card", "data-testid": `product-${p.id}` },
        h("a", { href: `#/product/${p.id}`, "data-testid": `product-link-${p.id}` }, p.name),
        h("div", { "data-testid": `product-price-${p.id}` }, formatCents(p.unit_price)),
        h("div", { class: "muted" }, `${p.stock} in stock`),
      ));
    }
    box.append(grid);
    return box;
  }

  private async viewProduct(id: string): Promise<HTMLElement> {
    const p = await this.api.product(id);
    const msg = h("div");
    const qty = h("input", {
      "data-testid": "qty-input", type: "number", min: "1", value: "1",
    }) as HTMLInputElement;
    const add = h("button", { "data-testid": "add-to-cart" }, "Add to cart");
    add.addEventListener("click", () => void (async () => {
      clearChildren(msg);
      try {
        const cart = await this.api.cartAdd(p.id, Number(qty.value));
        this.state.cartCount = cart.lines.reduce((n, l) => n + l.qty, 0);
        await this.render();
      } catch (err) {
        msg.append(this.errorBox(err, "product-error"));
      }
    })());
    return h("section", { class: "product", "data-testid": "product-detail" },
      h("h2", {}, p.name),
      h("p", {}, p.description ?? ""),
      h("div", { "data-testid": "detail-price" }, formatCents(p.unit_price)),
      h("div", { class: "muted", "data-testid": "detail-stock" }, `${p.stock} in stock`),
      qty, add, msg,
    );
  }

  private async viewCart(): Promise<HTMLElement> {
    const cart = await this.api.cart();
    this.state.cartCount = cart.lines.reduce((n, l) => n + l.qty, 0);
    const box = h("section", { class: "cart" }, h("h2", {}, "Your cart"));
    const msg = h("div");

    for (const line of cart.lines) {
      const remove = h("button", { "data-testid": `line-remove-${line.product_id}` }, "Remove");
      remove.addEventListener("click", () => void (async () => {
        await this.api.cartRemove(line.product_id);
        await this.refreshCartBadge();
        await this.render();
      })());
      box.append(h("div", { class: "line", "data-testid": `cart-line-${line.product_id}` },
        h("span", {}, line.name),
        h("span", { "data-testid": `line-qty-${line.product_id}` }, `x${line.qty}`),
        h("span", {}, formatCents(line.unit_price_at_add * line.qty)),
        remove,
      ));
    }

    // the figure shown is the server's cart_total, verbatim
    box.append(h("div", { class: "total" }, "Total: ",
      h("span", { "data-testid": "cart-total" }, formatCents(cart.total))));

    const checkoutBtn = h("button", {
      "data-testid": "checkout-button",
      disabled: cart.lines.length === 0,
    }, "Checkout");
    checkoutBtn.addEventListener("click", () => void (async () => {
      clearChildren(msg);
      try {
        const order = await this.api.checkout();
        this.state.cartCount = 0;
        this.navigate(`pay/${order.id}`);
      } catch (err) {
        // stock raced away: the cart is untouched server-side, say which line
        msg.append(this.errorBox(err, "cart-error"));
        await this.refreshCartBadge();
      }
    })());
    box.append(checkoutBtn, msg);
    return box;
  }

  // -- payment -----------------------------------------------------------------

  private async viewPay(orderId: string): Promise<HTMLElement> {
    const order = await this.api.order(orderId);
    const box = h("section", { class: "pay" },
      h("h2", {}, "Payment"),
      h("div", {}, "Order total: ",
        h("span", { "data-testid": "pay-order-total" }, formatCents(order.total))),
      h("div", { "data-testid": "pay-order-status" }, order.status),
    );
    if (order.status !== "AwaitingPayment") {
      box.append(h("div", { class: "banner" }, "This order is not awaiting payment."));
      return box;
    }

    const msg = h("div", { "data-testid": "pay-message" });
    const result = h("div", { "data-testid": "pay-result" });

    const pan = h("input", { "data-testid": "pan-input", autocomplete: "off" }) as HTMLInputElement;
    const month = h("input", { "data-testid": "exp-month", value: "12" }) as HTMLInputElement;
    const year = h("input", { "data-testid": "exp-year", value: "2031" }) as HTMLInputElement;
    const cvv = h("input", { "data-testid": "cvv-input", type: "password" }) as HTMLInputElement;
    const otpCode = h("input", { "data-testid": "pay-otp-code", inputmode: "numeric" }) as HTMLInputElement;

    let challengeId: string | null = null;
    const otpBtn = h("button", { "data-testid": "request-otp" }, "Send confirmation code");
    otpBtn.addEventListener("click", () => void (async () => {
      clearChildren(msg);
      try {
        const challenge = await this.api.paymentOtp();
        challengeId = challenge.challenge_id;
        msg.append(h("div", { class: "banner", "data-testid": "pay-otp-hint" },
          "Confirmation code sent."));
      } catch (err) {
        msg.append(this.errorBox(err, "pay-error"));
      }
    })());

    const wipeCardForm = () => {
      pan.value = "";
      cvv.value = "";
      otpCode.value = "";
    };

    const settle = async (intent: Intent) => {
      clearChildren(result);
      if (intent.status === "Approved" && intent.confirmation) {
        const verdict = await this.api.verifyReceipt(intent.confirmation);
        result.append(
          h("div", { class: "banner ok", "data-testid": "pay-approved" }, "Payment approved."),
          h("div", {
            class: verdict.valid ? "badge ok" : "badge error",
            "data-testid": "receipt-badge",
          }, verdict.valid ? "receipt verified" : "RECEIPT INVALID"),
        );
      } else if (intent.status === "Declined") {
        this.payAttempt.set(orderId, (this.payAttempt.get(orderId) ?? 0) + 1);
        result.append(h("div", { class: "banner error", "data-testid": "decline-reason" },
          humanize(intent.decline_reason ?? "declined")));
      } else {
        this.payAttempt.set(orderId, (this.payAttempt.get(orderId) ?? 0) + 1);
        result.append(h("div", { class: "banner error", "data-testid": "pay-failed" },
          humanize(intent.decline_reason ?? intent.status)));
      }
    };

    const intentKey = (method: string) =>
      `ui-${orderId}-${method}-${this.payAttempt.get(orderId) ?? 0}`;

    const payCard = h("button", { "data-testid": "pay-submit" }, "Pay by card");
    payCard.addEventListener("click", () => void (async () => {
      clearChildren(msg);
      const digits = pan.value.replace(/\s+/g, "");
      if (!luhnValid(digits)) {
        msg.append(h("div", { class: "banner error", "data-testid": "card-error" },
          "That card number fails its checksum. Check the digits."));
        return; // nothing leaves the browser
      }
      try {
        if (!this.clientKey) {
          const bytes = newClientKeyBytes();
          const { key_id } = await this.api.enrollClientKey(toBase64(bytes));
          this.clientKey = { bytes, keyId: key_id };
        }
        const intent = await this.api.createIntent(
          orderId, order.total, "card", intentKey("card"));
        const envelope = await sealEnvelope(this.clientKey.bytes, this.clientKey.keyId, {
          pan: digits,
          expiry_month: Number(month.value),
          expiry_year: Number(year.value),
          cvv: cvv.value,
          amount: order.total,
          currency: "USD",
          order_id: orderId,
          nonce: toBase64(newClientKeyBytes().slice(0, 16)),
        });
        const outcome = await this.api.submitCard(
          intent.intent_id, envelope as unknown as Record<string, unknown>,
          challengeId ?? undefined, challengeId ? otpCode.value : undefined);
        await settle(outcome);
      } catch (err) {
        msg.append(this.errorBox(err, "pay-error"));
      } finally {
        wipeCardForm(); // card digits and codes never outlive the submission
      }
    })());

    const payWallet = h("button", { "data-testid": "wallet-pay" }, "Pay with wallet");
    payWallet.addEventListener("click", () => void (async () => {
      clearChildren(msg);
      try {
        const { token } = await this.api.devWalletToken(order.total);
        const intent = await this.api.createIntent(
          orderId, order.total, "wallet", intentKey("wallet"));
        const outcome = await this.api.submitWallet(
          intent.intent_id, token,
          challengeId ?? undefined, challengeId ? otpCode.value : undefined);
        await settle(outcome);
      } catch (err) {
        msg.append(this.errorBox(err, "pay-error"));
      } finally {
        otpCode.value = "";
      }
    })());

    box.append(
      h("h3", {}, "Card"),
      h("label", {}, "Card number"), pan,
      h("label", {}, "Expiry"), month, year,
      h("label", {}, "CVV"), cvv,
      h("h3", {}, "Confirmation"),
      otpBtn, h("label", {}, "Code"), otpCode,
      payCard,
      ...(this.state.sandbox ? [payWallet] : []),
      msg, result,
      h("a", { href: "#/orders", "data-testid": "to-orders" }, "View orders"),
    );
    return box;
  }

  // -- orders ------------------------------------------------------------------

  private async viewOrders(): Promise<HTMLElement> {
    const { orders } = await this.api.orders();
    const box = h("section", { "data-testid": "orders-view" }, h("h2", {}, "Your orders"));
    for (const o of orders) {
      box.append(h("div", { class: "line", "data-testid": `order-row-${o.id}` },
        h("a", { href: `#/order/${o.id}` }, o.id),
        h("span", { "data-testid": `order-status-${o.id}` }, o.status),
        h("span", {}, formatCents(o.total)),
      ));
    }
    if (orders.length === 0) box.append(h("p", { class: "muted" }, "No orders yet."));
    return box;
  }

  private async viewOrder(id: string): Promise<HTMLElement> {
    const o = await this.api.order(id);
    const msg = h("div");
    const box = h("section", { "data-testid": "order-detail" },
      h("h2", {}, `Order ${o.id}`),
      h("div", { "data-testid": "order-detail-status" }, o.status),
      h("div", {}, "Total: ", h("span", { "data-testid": "order-detail-total" },
        formatCents(o.total))),
    );
    for (const line of o.lines) {
      box.append(h("div", { class: "line" },
        h("span", {}, line.name), h("span", {}, `x${line.qty}`)));
    }
    box.append(h("h3", {}, "History"));
    for (const entry of o.history) {
      box.append(h("div", { class: "muted" }, entry.status));
    }
    if (o.status === "AwaitingPayment") {
      const payLink = h("a", { href: `#/pay/${o.id}` }, "Pay now");
      const cancelBtn = h("button", { "data-testid": "cancel-order" }, "Cancel order");
      cancelBtn.addEventListener("click", () => void (async () => {
        try {
          await this.api.cancelOrder(o.id);
          await this.render();
        } catch (err) {
          msg.append(this.errorBox(err, "order-error"));
        }
      })());
      box.append(payLink, cancelBtn);
    }
    box.append(msg);
    return box;
  }

  // -- admin -------------------------------------------------------------------

  private async viewAdmin(route: string): Promise<HTMLElement> {
    if (this.state.role !== "admin") {
      return h("section", { "data-testid": "denied" },
        h("h2", {}, "Not authorized"),
        h("p", {}, "This area needs an administrator account."));
    }
    const tabs = h("nav", { class: "tabs" },
      h("a", { href: "#/admin/products" }, "Products"),
      h("a", { href: "#/admin/orders" }, "Orders"),
      h("a", { href: "#/admin/security" }, "Security"),
    );
    const box = h("section", { class: "admin" }, tabs);
    if (route === "admin/orders") box.append(await this.adminOrders());
    else if (route === "admin/security") box.append(await this.adminSecurity());
    else box.append(await this.adminProducts());
    return box;
  }

  private async adminProducts(): Promise<HTMLElement> {
    const [{ products }, { categories }] = await Promise.all([
      this.api.adminProducts(), this.api.adminCategories(),
    ]);
    const box = h("div", {}, h("h2", {}, "Products"));
    const msg = h("div");

    const table = h("div", { "data-testid": "admin-product-table" });
    for (const p of products) {
      const toggle = h("button", { "data-testid": `ap-toggle-${p.id}` },
        p.active ? "Deactivate" : "Activate");
      toggle.addEventListener("click", () => void (async () => {
        clearChildren(msg);
        try {
          await this.api.adminUpdateProduct(p.id, {
            active: !p.active, expected_revision: p.revision,
          });
          await this.render();
        } catch (err) {
          // stale revision: surface the conflict and refresh the table
          msg.append(this.errorBox(err, "ap-error"));
          await this.render();
        }
      })());
      table.append(h("div", { class: "line", "data-testid": `ap-row-${p.id}` },
        h("span", {}, p.name),
        h("span", {}, formatCents(p.unit_price)),
        h("span", {}, `stock ${p.stock}`),
        h("span", { class: "muted" }, p.active ? "active" : "hidden"),
        toggle,
      ));
    }
    box.append(table);

    const name = h("input", { "data-testid": "ap-name" }) as HTMLInputElement;
    const price = h("input", { "data-testid": "ap-price", type: "number" }) as HTMLInputElement;
    const stock = h("input", { "data-testid": "ap-stock", type: "number" }) as HTMLInputElement;
    const select = h("select", { "data-testid": "ap-category" }) as HTMLSelectElement;
    for (const c of categories) {
      select.append(h("option", { value: c.id }, c.name));
    }
    const create = h("button", { "data-testid": "ap-create" }, "Create product");
    create.addEventListener("click", () => void (async () => {
      clearChildren(msg);
      try {
        await this.api.adminCreateProduct({
          name: name.value,
          category_id: select.value,
          unit_price: Number(price.value),
          stock: Number(stock.value),
        });
        await this.render();
      } catch (err) {
        msg.append(this.errorBox(err, "ap-error"));
      }
    })());
    box.append(h("h3", {}, "New product"), name, select, price, stock, create, msg);
    return box;
  }

  private async adminOrders(): Promise<HTMLElement> {
    const { orders } = await this.api.adminOrders();
    const box = h("div", {}, h("h2", {}, "All orders"));
    const msg = h("div");
    for (const o of orders) {
      const next = NEXT_STATUS[o.status];
      const advance = h("button", {
        "data-testid": `ao-advance-${o.id}`,
        disabled: next === undefined, // illegal jumps are not offered
      }, next ? `Mark ${next}` : "No action");
      if (next) {
        advance.addEventListener("click", () => void (async () => {
          clearChildren(msg);
          try {
            await this.api.adminOrderStatus(o.id, next);
            await this.render();
          } catch (err) {
            msg.append(this.errorBox(err, "ao-error"));
          }
        })());
      }
      box.append(h("div", { class: "line", "data-testid": `ao-row-${o.id}` },
        h("span", {}, o.id),
        h("span", { "data-testid": `ao-status-${o.id}` }, o.status),
        h("span", {}, formatCents(o.total)),
        advance,
      ));
    }
    box.append(msg);
    return box;
  }

  private async adminSecurity(): Promise<HTMLElement> {
    const report = await this.api.securityReport();
    const box = h("div", { "data-testid": "security-panel" },
      h("h2", {}, "Security"),
      h("div", { class: "line" }, "Unauthorized attempts: ",
        h("span", { "data-testid": "sec-attempts" }, String(report.unauthorized_attempts))),
      h("div", { class: "line" }, "Successful breaches: ",
        h("span", { "data-testid": "sec-breaches" }, String(report.successful_breaches))),
      h("div", { class: "line" }, "Lockouts: ",
        h("span", { "data-testid": "sec-lockouts" }, String(report.lockouts))),
      h("h3", {}, "Recent lockouts"),
    );
    for (const ev of report.recent_lockouts) {
      box.append(h("div", { class: "muted", "data-testid": "sec-lockout-row" },
        `${ev.email} (${ev.detail || "no label"})`));
    }
    const refresh = h("button", { "data-testid": "sec-refresh" }, "Refresh");
    refresh.addEventListener("click", () => void this.render());
    box.append(refresh);
    return box;
  }

  // -- sandbox outbox panel -------------------------------------------------------

  private async outboxPanel(): Promise<HTMLElement> {
    const box = h("aside", { class: "outbox", "data-testid": "outbox-panel" },
      h("h3", {}, "Dev OTP outbox"));
    try {
      const { entries } = await this.api.devOutbox();
      for (const e of entries.slice(-8)) {
        box.append(h("div", { class: "muted", "data-testid": `outbox-${e.challenge_id}` },
          `${e.email}: `,
          h("code", { "data-testid": `outbox-code-${e.challenge_id}` }, e.code)));
      }
    } catch {
      box.append(h("div", { class: "muted" }, "outbox unavailable"));
    }
    return box;
  }
}

function humanize(code: string): string {
  return code.replace(/_/g, " ");
}

function clearChildren(el: HTMLElement): void {
  clear(el);
}

export function createApp(root: HTMLElement, base = ""): App {
  return new App(root, base);
}
