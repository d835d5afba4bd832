// Bundled name pools. Given and family names are combined uniformly.

pub(crate) const GIVEN_NAMES: &[&str] = &[
    "Aaron", "Abigail", "Adam", "Adrian", "Aidan", "Alan", "Albert", "Alexander", "Alice", "Alison",
    "Amanda", "Amelia", "Amy", "Andrew", "Angela", "Anna", "Anthony", "Arthur", "Ashley", "Barbara",
    "Benjamin", "Bethany", "Brian", "Bridget", "Callum", "Carl", "Caroline", "Catherine", "Charles", "Charlotte",
    "Chloe", "Christopher", "Claire", "Connor", "Craig", "Daniel", "David", "Deborah", "Dennis", "Diana",
    "Dominic", "Donna", "Douglas", "Edward", "Eleanor", "Elizabeth", "Emily", "Emma", "Eric", "Evelyn",
    "Fiona", "Frances", "Frank", "Gareth", "Gary", "Gavin", "George", "Georgia", "Gordon", "Grace",
    "Graham", "Hannah", "Harry", "Hazel", "Heather", "Helen", "Henry", "Ian", "Isabel", "Jack",
    "Jacob", "James", "Jane", "Janet", "Jason", "Jennifer", "Jessica", "Joanna", "John", "Jonathan",
    "Joseph", "Julia", "Karen", "Katherine", "Keith", "Kevin", "Laura", "Lauren", "Leon", "Lewis",
    "Lily", "Lisa", "Louise", "Lucy", "Luke", "Margaret", "Maria", "Mark", "Martin", "Matthew",
    "Megan", "Michael", "Michelle", "Natalie", "Neil", "Nicholas", "Nicola", "Oliver", "Olivia", "Patrick",
    "Paul", "Peter", "Philip", "Rachel", "Rebecca", "Richard", "Robert", "Ruth", "Samuel", "Sarah",
];

pub(crate) const FAMILY_NAMES: &[&str] = &[
    "Adams", "Allen", "Anderson", "Armstrong", "Atkinson", "Bailey", "Baker", "Barker", "Barnes", "Bell",
    "Bennett", "Brooks", "Brown", "Butler", "Campbell", "Carter", "Chapman", "Clark", "Clarke", "Cole",
    "Collins", "Cook", "Cooper", "Cox", "Davies", "Davis", "Dixon", "Edwards", "Ellis", "Evans",
    "Fisher", "Fletcher", "Foster", "Fox", "Graham", "Grant", "Gray", "Green", "Griffiths", "Hall",
    "Harris", "Harrison", "Hill", "Holmes", "Hughes", "Hunt", "Hunter", "Jackson", "James", "Johnson",
    "Jones", "Kelly", "Kennedy", "King", "Knight", "Lee", "Lewis", "Lloyd", "Marshall", "Martin",
    "Mason", "Matthews", "Miller", "Mills", "Mitchell", "Moore", "Morgan", "Morris", "Murphy", "Murray",
    "Owen", "Palmer", "Parker", "Patel", "Phillips", "Powell", "Price", "Reid", "Reynolds", "Richards",
    "Richardson", "Roberts", "Robinson", "Rogers", "Russell", "Scott", "Shaw", "Simpson", "Smith", "Stevens",
    "Stewart", "Taylor", "Thomas", "Thompson", "Turner", "Walker", "Ward", "Watson", "White", "Wilson",
];

pub(crate) const ROLES: &[&str] = &[
    "Accountant", "Account Manager", "Administrator", "Analyst", "Assistant Director", "Buyer",
    "Compliance Officer", "Contracts Manager", "Customer Advisor", "Engineer", "Finance Director",
    "HR Officer", "IT Support", "Marketing Executive", "Office Manager", "Operations Lead",
    "Payroll Clerk", "Project Manager", "Receptionist", "Sales Executive", "Senior Developer", "Team Leader",
];
