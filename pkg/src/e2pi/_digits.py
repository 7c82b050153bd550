"""Embedded decimal expansions of pi and e.

The literals are truncated (not rounded) after 1050 decimals, so the true
value lies in ``[literal, literal + 10**-1050)``.
"""

PI_DIGITS = (
    "3.14159265358979323846264338327950288419716939937510582097494459230781"
    "6406286208998628034825342117067982148086513282306647093844609550582231"
    "7253594081284811174502841027019385211055596446229489549303819644288109"
    "7566593344612847564823378678316527120190914564856692346034861045432664"
    "8213393607260249141273724587006606315588174881520920962829254091715364"
    "3678925903600113305305488204665213841469519415116094330572703657595919"
    "5309218611738193261179310511854807446237996274956735188575272489122793"
    "8183011949129833673362440656643086021394946395224737190702179860943702"
    "7705392171762931767523846748184676694051320005681271452635608277857713"
    "4275778960917363717872146844090122495343014654958537105079227968925892"
    "3542019956112129021960864034418159813629774771309960518707211349999998"
    "3729780499510597317328160963185950244594553469083026425223082533446850"
    "3526193118817101000313783875288658753320838142061717766914730359825349"
    "0428755468731159562863882353787593751957781857780532171226806613001927"
    "8766111959092164201989380952572010654858632788659361533818279682303019"
    "52"
)

E_DIGITS = (
    "2.71828182845904523536028747135266249775724709369995957496696762772407"
    "6630353547594571382178525166427427466391932003059921817413596629043572"
    "9003342952605956307381323286279434907632338298807531952510190115738341"
    "8793070215408914993488416750924476146066808226480016847741185374234544"
    "2437107539077744992069551702761838606261331384583000752044933826560297"
    "6067371132007093287091274437470472306969772093101416928368190255151086"
    "5746377211125238978442505695369677078544996996794686445490598793163688"
    "9230098793127736178215424999229576351482208269895193668033182528869398"
    "4964651058209392398294887933203625094431173012381970684161403970198376"
    "7932068328237646480429531180232878250981945581530175671736133206981125"
    "0996181881593041690351598888519345807273866738589422879228499892086805"
    "8257492796104841984443634632449684875602336248270419786232090021609902"
    "3530436994184914631409343173814364054625315209618369088870701676839642"
    "4378140592714563549061303107208510383750510115747704171898610687396965"
    "5212671546889570350354021234078498193343210681701210056278802351930332"
    "24"
)

PI_PROVENANCE = (
    "1050 decimals, truncated; generated offline with mpmath 1.3.0 at 1120 "
    "digits and cross-checked digit-for-digit against sympy.N(pi, 1100)"
)

E_PROVENANCE = (
    "1050 decimals, truncated; generated offline with mpmath 1.3.0 at 1120 "
    "digits and cross-checked digit-for-digit against sympy.N(E, 1100)"
)
